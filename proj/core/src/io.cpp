#include "lagfactor/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lagfactor/error.hpp"

namespace lagfactor {

using json = nlohmann::json;

namespace {

std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool parse_double(const std::string& cell, double& value)
{
    if (cell.empty()) return false;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
}

bool getline_record(std::istream& in, std::string& line)
{
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string optional_cell(const std::optional<double>& v)
{
    return v ? format_double(*v) : std::string();
}

std::optional<double> read_optional_cell(const std::string& cell)
{
    if (cell.empty()) return std::nullopt;
    double v = 0.0;
    if (!parse_double(cell, v)) throw IoError("malformed number '" + cell + "'");
    return v;
}

double read_cell(const std::string& cell, const std::string& where)
{
    double v = 0.0;
    if (!parse_double(cell, v)) throw IoError(where + ": malformed number '" + cell + "'");
    return v;
}

json matrix_row_major(const Matrix& m)
{
    json arr = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    }
    return arr;
}

} // namespace

std::vector<std::string> split_csv_record(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            out.push_back(was_quoted ? field : trim(field));
            field.clear();
            was_quoted = false;
        } else {
            field += c;
        }
    }
    out.push_back(was_quoted ? field : trim(field));
    return out;
}

std::string quote_csv_field(const std::string& s)
{
    const bool padded = !s.empty() && (std::isspace(static_cast<unsigned char>(s.front())) ||
                                       std::isspace(static_cast<unsigned char>(s.back())));
    if (!padded && s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Panels -------------------------------------------------------------------

TimeSeriesPanel read_panel_csv(std::istream& in)
{
    std::string line;
    if (!getline_record(in, line) || trim(line).empty()) throw IoError("csv: missing header row");
    std::vector<std::string> header = split_csv_record(line);
    bool has_time = false;
    if (!header.empty()) {
        const std::string first = lower(header.front());
        has_time = first == "date" || first == "time";
    }
    std::vector<std::string> ids(header.begin() + (has_time ? 1 : 0), header.end());
    if (ids.empty()) throw IoError("csv: header has no data columns");
    std::set<std::string> seen;
    for (std::size_t j = 0; j < ids.size(); ++j) {
        if (ids[j].empty()) throw IoError("csv: header column " + std::to_string(j + 1) + " is empty");
        if (!seen.insert(ids[j]).second) throw IoError("csv: duplicate column '" + ids[j] + "'");
    }

    std::vector<std::vector<double>> rows;
    std::vector<std::string> stamps;
    std::size_t file_line = 1;
    while (getline_record(in, line)) {
        ++file_line;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_record(line);
        const std::size_t data_row = rows.size() + 1;
        const std::string where = "row " + std::to_string(data_row) + " (line " + std::to_string(file_line) + ")";
        if (cells.size() != header.size()) {
            throw IoError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                          std::to_string(cells.size()));
        }
        if (has_time) stamps.push_back(cells.front());
        std::vector<double> values(ids.size());
        for (std::size_t j = 0; j < ids.size(); ++j) {
            const std::string& cell = cells[j + (has_time ? 1 : 0)];
            if (cell.empty()) throw IoError(where + ", column '" + ids[j] + "': missing value");
            if (!parse_double(cell, values[j]) || !std::isfinite(values[j])) {
                throw IoError(where + ", column '" + ids[j] + "': not a finite number '" + cell + "'");
            }
        }
        rows.push_back(std::move(values));
    }
    if (rows.size() < 2) throw IoError("csv: need at least two data rows, found " + std::to_string(rows.size()));

    Matrix values(static_cast<Index>(rows.size()), static_cast<Index>(ids.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < ids.size(); ++j) values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    std::optional<std::vector<std::string>> ts;
    if (has_time) ts = std::move(stamps);
    return TimeSeriesPanel(std::move(values), std::move(ids), std::move(ts));
}

TimeSeriesPanel ingest_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return read_panel_csv(in);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_panel_csv(std::ostream& out, const TimeSeriesPanel& panel)
{
    const auto& ts = panel.timestamps();
    if (ts) out << "date,";
    const auto& ids = panel.column_ids();
    for (std::size_t j = 0; j < ids.size(); ++j) out << (j ? "," : "") << quote_csv_field(ids[j]);
    out << '\n';
    const Matrix& v = panel.values();
    for (Index i = 0; i < v.rows(); ++i) {
        if (ts) out << quote_csv_field((*ts)[static_cast<std::size_t>(i)]) << ',';
        for (Index j = 0; j < v.cols(); ++j) out << (j ? "," : "") << format_double(v(i, j));
        out << '\n';
    }
}

void write_panel_csv(const std::filesystem::path& path, const TimeSeriesPanel& panel)
{
    std::ostringstream os;
    write_panel_csv(os, panel);
    write_text_file(path, os.str());
}

// Model fits ---------------------------------------------------------------

std::string model_fit_to_json(const ModelFit& fit, const RegularizationConfig& cfg)
{
    json j;
    j["mode"] = to_string(fit.mode);
    j["lags"] = fit.lags;
    j["b_shape"] = {fit.b_hat.rows(), fit.b_hat.cols()};
    json triplets = json::array();
    for (Index c = 0; c < fit.b_hat.cols(); ++c) {
        for (Index r = 0; r < fit.b_hat.rows(); ++r) {
            if (fit.b_hat(r, c) != 0.0) triplets.push_back({r, c, fit.b_hat(r, c)});
        }
    }
    j["b_triplets"] = std::move(triplets);
    j["theta_shape"] = {fit.theta_hat.rows(), fit.theta_hat.cols()};
    j["singular_values"] = std::vector<double>(fit.singular_values.data(),
                                               fit.singular_values.data() + fit.singular_values.size());
    j["right_basis_shape"] = {fit.right_basis.rows(), fit.right_basis.cols()};
    j["right_basis"] = matrix_row_major(fit.right_basis);
    j["rank"] = fit.rank;
    j["objective_trace"] = fit.objective_trace;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["diagnostics"] = {{"max_kkt_residual", fit.max_kkt_residual},
                        {"monotone", fit.monotone},
                        {"degenerate_input", fit.degenerate_input}};
    json echo;
    echo["lambda_b"] = fit.lambda_b;
    echo["lambda_theta"] = fit.lambda_theta ? json(*fit.lambda_theta) : json(nullptr);
    echo["rank_r"] = fit.rank_r ? json(*fit.rank_r) : json(nullptr);
    echo["phi"] = fit.phi ? json(*fit.phi) : json(nullptr);
    echo["lags"] = cfg.lags;
    echo["outer_tol"] = cfg.outer_tol;
    echo["max_outer_iters"] = cfg.max_outer_iters;
    echo["lasso_tol"] = cfg.lasso_tol;
    echo["lasso_max_iters"] = cfg.lasso_max_iters;
    echo["inner_tol"] = cfg.inner_tol;
    echo["inner_max_iters"] = cfg.inner_max_iters;
    echo["rank_tolerance"] = cfg.rank_tolerance;
    echo["threads"] = cfg.threads;
    j["config_echo"] = std::move(echo);
    return j.dump(2) + "\n";
}

ModelFit model_fit_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("model fit json: ") + e.what());
    }
    try {
        ModelFit fit;
        const std::string mode = j.at("mode").get<std::string>();
        bool known = false;
        for (FitMode m : {FitMode::Lagrangian, FitMode::Empirical, FitMode::Box, FitMode::PrincipalComponents}) {
            if (to_string(m) == mode) {
                fit.mode = m;
                known = true;
            }
        }
        if (!known) throw IoError("model fit json: unknown mode '" + mode + "'");
        fit.lags = j.at("lags").get<int>();
        const auto bs = j.at("b_shape").get<std::vector<Index>>();
        if (bs.size() != 2) throw IoError("model fit json: b_shape must have two entries");
        fit.b_hat = Matrix::Zero(bs[0], bs[1]);
        for (const auto& t : j.at("b_triplets")) {
            const Index r = t.at(0).get<Index>();
            const Index c = t.at(1).get<Index>();
            if (r < 0 || r >= bs[0] || c < 0 || c >= bs[1]) throw IoError("model fit json: triplet out of range");
            fit.b_hat(r, c) = t.at(2).get<double>();
        }
        const auto sv = j.at("singular_values").get<std::vector<double>>();
        fit.singular_values = Eigen::Map<const Vector>(sv.data(), static_cast<Index>(sv.size()));
        const auto rs = j.at("right_basis_shape").get<std::vector<Index>>();
        const auto rb = j.at("right_basis").get<std::vector<double>>();
        if (rs.size() != 2 || static_cast<Index>(rb.size()) != rs[0] * rs[1]) {
            throw IoError("model fit json: right_basis size does not match its shape");
        }
        fit.right_basis.resize(rs[0], rs[1]);
        for (Index r = 0; r < rs[0]; ++r) {
            for (Index c = 0; c < rs[1]; ++c) fit.right_basis(r, c) = rb[static_cast<std::size_t>(r * rs[1] + c)];
        }
        fit.rank = j.at("rank").get<int>();
        fit.objective_trace = j.at("objective_trace").get<std::vector<double>>();
        fit.converged = j.at("converged").get<bool>();
        fit.iterations = j.at("iterations").get<int>();
        if (j.contains("diagnostics")) {
            const auto& d = j["diagnostics"];
            fit.max_kkt_residual = d.value("max_kkt_residual", 0.0);
            fit.monotone = d.value("monotone", true);
            fit.degenerate_input = d.value("degenerate_input", false);
        }
        const auto& echo = j.at("config_echo");
        fit.lambda_b = echo.at("lambda_b").get<double>();
        if (!echo.at("lambda_theta").is_null()) fit.lambda_theta = echo["lambda_theta"].get<double>();
        if (!echo.at("rank_r").is_null()) fit.rank_r = echo["rank_r"].get<int>();
        if (!echo.at("phi").is_null()) fit.phi = echo["phi"].get<double>();
        return fit;
    } catch (const json::exception& e) {
        throw IoError(std::string("model fit json: ") + e.what());
    }
}

// Tuning, forecast, benchmark ---------------------------------------------

void write_criterion_table_csv(std::ostream& out, const TuningResult& result)
{
    out << "stage,lambda,rank,value,ok,error\n";
    for (const auto& e : result.criterion_table) {
        out << e.stage << ',' << format_double(e.lambda) << ',' << e.rank << ','
            << (e.ok ? format_double(e.value) : std::string()) << ',' << (e.ok ? 1 : 0) << ','
            << quote_csv_field(e.error) << '\n';
    }
}

std::vector<CriterionEntry> read_criterion_table_csv(std::istream& in)
{
    std::string line;
    if (!getline_record(in, line)) throw IoError("criterion table: missing header");
    std::vector<CriterionEntry> out;
    std::size_t n = 1;
    while (getline_record(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_record(line);
        const std::string where = "criterion table line " + std::to_string(n);
        if (cells.size() != 6) throw IoError(where + ": expected 6 fields");
        CriterionEntry e;
        e.stage = static_cast<int>(read_cell(cells[0], where));
        e.lambda = read_cell(cells[1], where);
        e.rank = static_cast<int>(read_cell(cells[2], where));
        e.ok = cells[4] == "1";
        e.value = e.ok ? read_cell(cells[3], where) : 0.0;
        e.error = cells[5];
        out.push_back(std::move(e));
    }
    return out;
}

std::string tuning_choice_to_json(const TuningResult& result, Criterion criterion)
{
    json j;
    j["criterion"] = to_string(criterion);
    j["lambda_opt"] = result.lambda_opt;
    j["rank_opt"] = result.rank_opt;
    j["k_hat"] = result.rank_opt / (result.fit.lags + 1);
    j["step1_lambda"] = result.step1_lambda;
    j["step1_rank"] = result.step1_rank;
    j["rank_clamped"] = result.rank_clamped;
    j["lags"] = result.fit.lags;
    j["b_nonzeros"] = (result.fit.b_hat.array() != 0.0).count();
    j["fit_rank"] = result.fit.rank;
    j["fit_converged"] = result.fit.converged;
    return j.dump(2) + "\n";
}

void write_forecast_csv(std::ostream& out, const ForecastResult& result, const std::vector<std::string>& column_ids)
{
    if (static_cast<Index>(column_ids.size()) != result.x_hat.cols()) {
        throw DimensionError("write_forecast_csv: column id count does not match the forecast width");
    }
    out << "step";
    for (const auto& id : column_ids) out << ',' << quote_csv_field(id);
    out << '\n';
    for (Index i = 0; i < result.x_hat.rows(); ++i) {
        out << i + 1;
        for (Index j = 0; j < result.x_hat.cols(); ++j) out << ',' << format_double(result.x_hat(i, j));
        out << '\n';
    }
}

Matrix read_matrix_csv(std::istream& in, std::vector<std::string>* header)
{
    std::string line;
    if (!getline_record(in, line)) throw IoError("csv: missing header row");
    const auto head = split_csv_record(line);
    if (header) *header = head;
    std::vector<std::vector<double>> rows;
    std::size_t n = 1;
    while (getline_record(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_record(line);
        const std::string where = "line " + std::to_string(n);
        if (cells.size() != head.size()) throw IoError(where + ": expected " + std::to_string(head.size()) + " fields");
        std::vector<double> r;
        for (const auto& c : cells) r.push_back(read_cell(c, where));
        rows.push_back(std::move(r));
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(head.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < head.size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return m;
}

void write_benchmark_rows_csv(std::ostream& out, const BenchmarkReport& report)
{
    out << "setting,replication,method,sen,spc,rerr_b,rerr_theta,projerr_theta,rerr_common,forecast_err,k_hat,"
           "b_density,seconds\n";
    for (const auto& r : report.rows) {
        out << quote_csv_field(r.setting_id) << ',' << r.replication << ',' << to_string(r.method) << ','
            << optional_cell(r.sen) << ',' << optional_cell(r.spc) << ',' << optional_cell(r.rerr_b) << ','
            << optional_cell(r.rerr_theta) << ',' << optional_cell(r.projerr_theta) << ','
            << format_double(r.rerr_common) << ',' << format_double(r.forecast_err) << ','
            << optional_cell(r.k_hat) << ',' << optional_cell(r.b_density) << ',' << format_double(r.seconds)
            << '\n';
    }
}

std::vector<EvaluationReport> read_benchmark_rows_csv(std::istream& in)
{
    std::string line;
    if (!getline_record(in, line)) throw IoError("benchmark rows: missing header");
    std::vector<EvaluationReport> out;
    std::size_t n = 1;
    while (getline_record(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        const auto c = split_csv_record(line);
        const std::string where = "benchmark rows line " + std::to_string(n);
        if (c.size() != 13) throw IoError(where + ": expected 13 fields");
        EvaluationReport r;
        r.setting_id = c[0];
        r.replication = static_cast<int>(read_cell(c[1], where));
        if (c[2] == "lag_adj") {
            r.method = Method::LagAdjusted;
        } else if (c[2] == "sw") {
            r.method = Method::StockWatson;
        } else {
            throw IoError(where + ": unknown method '" + c[2] + "'");
        }
        r.sen = read_optional_cell(c[3]);
        r.spc = read_optional_cell(c[4]);
        r.rerr_b = read_optional_cell(c[5]);
        r.rerr_theta = read_optional_cell(c[6]);
        r.projerr_theta = read_optional_cell(c[7]);
        r.rerr_common = read_cell(c[8], where);
        r.forecast_err = read_cell(c[9], where);
        r.k_hat = read_optional_cell(c[10]);
        r.b_density = read_optional_cell(c[11]);
        r.seconds = read_cell(c[12], where);
        out.push_back(std::move(r));
    }
    return out;
}

std::string benchmark_summary_to_json(const BenchmarkReport& report)
{
    json j;
    j["setting"] = report.setting.id;
    j["seed"] = report.setting.seed;
    j["failures"] = report.failures;
    j["failure_messages"] = report.failure_messages;
    json methods = json::object();
    for (const auto& s : report.summaries) {
        json m = json::object();
        for (const auto& metric : s.metrics) {
            m[metric.name] = {{"median", metric.median}, {"sd", metric.sd}, {"count", metric.count}};
        }
        methods[to_string(s.method)] = std::move(m);
    }
    j["methods"] = std::move(methods);
    return j.dump(2) + "\n";
}

// Small helpers --------------------------------------------------------------

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace lagfactor
