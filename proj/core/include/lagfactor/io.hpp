#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lagfactor/core.hpp"
#include "lagfactor/evaluate.hpp"
#include "lagfactor/forecast.hpp"
#include "lagfactor/tuning.hpp"

namespace lagfactor {

// Panels -------------------------------------------------------------------

/// Header row of column ids; a leading column named "date" or "time"
/// (case-insensitive) becomes the timestamps. Cells are decimal floats.
TimeSeriesPanel read_panel_csv(std::istream& in);
TimeSeriesPanel ingest_csv(const std::filesystem::path& path);

/// Writes values with 17 significant digits so a re-read is exact.
void write_panel_csv(std::ostream& out, const TimeSeriesPanel& panel);
void write_panel_csv(const std::filesystem::path& path, const TimeSeriesPanel& panel);

// Model fits ---------------------------------------------------------------

/// JSON with b_triplets, singular_values, right_basis (row-major),
/// rank, objective_trace, converged, iterations and config_echo.
std::string model_fit_to_json(const ModelFit& fit, const RegularizationConfig& cfg);

/// Rebuilds the sparse B, the singular system and diagnostics. theta_hat is
/// not stored and comes back empty.
ModelFit model_fit_from_json(const std::string& text);

// Tuning, forecast, benchmark ---------------------------------------------

void write_criterion_table_csv(std::ostream& out, const TuningResult& result);
std::vector<CriterionEntry> read_criterion_table_csv(std::istream& in);
std::string tuning_choice_to_json(const TuningResult& result, Criterion criterion);

void write_forecast_csv(std::ostream& out, const ForecastResult& result, const std::vector<std::string>& column_ids);
Matrix read_matrix_csv(std::istream& in, std::vector<std::string>* header = nullptr);

void write_benchmark_rows_csv(std::ostream& out, const BenchmarkReport& report);
std::vector<EvaluationReport> read_benchmark_rows_csv(std::istream& in);
std::string benchmark_summary_to_json(const BenchmarkReport& report);

// Small helpers --------------------------------------------------------------

std::string format_double(double v);
/// One comma-separated record; double quotes wrap fields, "" escapes a quote.
std::vector<std::string> split_csv_record(const std::string& line);
std::string quote_csv_field(const std::string& s);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

} // namespace lagfactor
