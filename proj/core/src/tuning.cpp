#include "lagfactor/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lagfactor/error.hpp"
#include "lagfactor/parallel.hpp"

namespace lagfactor {

std::string to_string(Criterion c)
{
    return c == Criterion::Pic ? "pic" : "pic_star";
}

Criterion criterion_from_string(const std::string& name)
{
    if (name == "pic") return Criterion::Pic;
    if (name == "pic_star" || name == "pic*") return Criterion::PicStar;
    throw ValidationError("unknown criterion '" + name + "' (expected pic or pic_star)");
}

void TuningGrid::validate(const LagDesign& design) const
{
    if (lambda_values.empty() || rank_values.empty()) throw ValidationError("tuning grid must be nonempty");
    for (std::size_t i = 0; i < lambda_values.size(); ++i) {
        if (!(lambda_values[i] > 0.0)) throw ValidationError("grid lambdas must be positive");
        if (i > 0 && !(lambda_values[i] > lambda_values[i - 1])) {
            throw ValidationError("grid lambdas must be strictly ascending");
        }
    }
    const Index max_rank = std::min(design.effective_rows(), design.series());
    for (std::size_t i = 0; i < rank_values.size(); ++i) {
        if (rank_values[i] < 1 || rank_values[i] > max_rank) {
            throw ValidationError("grid rank " + std::to_string(rank_values[i]) + " outside [1, " +
                                  std::to_string(max_rank) + "]");
        }
        if (i > 0 && rank_values[i] <= rank_values[i - 1]) {
            throw ValidationError("grid ranks must be strictly ascending");
        }
    }
    if (lags != design.lags) throw ValidationError("grid lag order does not match the design");
}

double lambda_max(const LagDesign& design)
{
    const double t = static_cast<double>(design.effective_rows());
    return (design.predictors.transpose() * design.response / t).cwiseAbs().maxCoeff();
}

TuningGrid default_grid(const LagDesign& design, int lambda_count, int max_rank)
{
    if (lambda_count < 1 || max_rank < 1) throw ValidationError("grid sizes must be >= 1");
    TuningGrid grid;
    grid.lags = design.lags;
    const double hi = lambda_max(design);
    if (!(hi > 0.0)) throw ValidationError("lambda_max is zero; the panel carries no lag signal");
    const double lo = 0.01 * hi;
    for (int i = 0; i < lambda_count; ++i) {
        const double frac = lambda_count == 1 ? 1.0 : static_cast<double>(i) / (lambda_count - 1);
        grid.lambda_values.push_back(lo * std::pow(hi / lo, frac));
    }
    grid.lambda_values.back() = hi;
    const Index cap = std::min<Index>(max_rank, std::min(design.effective_rows(), design.series()) / 2);
    for (int r = 1; r <= std::max<Index>(cap, 1); ++r) grid.rank_values.push_back(r);
    return grid;
}

namespace {

struct PenaltyParts {
    double sigma2 = 0.0;
    double sparsity = 0.0; // (log T / T) ||B||_0
    double rank = 0.0;     // r (T + p) / (T p) log(T p)
};

PenaltyParts penalty_parts(const LagDesign& design, const ModelFit& fit, int rank, SparsityPenalty penalty)
{
    const double t = static_cast<double>(design.effective_rows());
    const double p = static_cast<double>(design.series());
    const Matrix res = fit_residual(design, fit.b_hat, fit.theta_hat);
    PenaltyParts parts;
    parts.sigma2 = res.squaredNorm() / (t * p);
    const double nonzeros = static_cast<double>((fit.b_hat.array() != 0.0).count());
    parts.sparsity = std::log(t) / t * nonzeros;
    if (penalty == SparsityPenalty::PerSeries) parts.sparsity /= p;
    parts.rank = rank * (t + p) / (t * p) * std::log(t * p);
    return parts;
}

} // namespace

double pic(const LagDesign& design, const ModelFit& fit, int rank, SparsityPenalty penalty)
{
    const PenaltyParts parts = penalty_parts(design, fit, rank, penalty);
    return parts.sigma2 + parts.sigma2 * (parts.sparsity + parts.rank);
}

std::optional<double> pic_star(const LagDesign& design, const ModelFit& fit, int rank, SparsityPenalty penalty)
{
    const PenaltyParts parts = penalty_parts(design, fit, rank, penalty);
    if (!(parts.sigma2 > 0.0)) return std::nullopt;
    return std::log(parts.sigma2) + parts.sparsity + parts.rank;
}

namespace {

double evaluate_criterion(const LagDesign& design, const ModelFit& fit, int rank, Criterion criterion,
                          SparsityPenalty penalty)
{
    if (criterion == Criterion::Pic) return pic(design, fit, rank, penalty);
    return pic_star(design, fit, rank, penalty).value_or(-std::numeric_limits<double>::infinity());
}

// Index of the best ok entry: smallest value, then larger lambda, then smaller rank.
std::optional<std::size_t> best_entry(const std::vector<CriterionEntry>& entries, std::size_t begin,
                                      std::size_t end)
{
    std::optional<std::size_t> best;
    for (std::size_t i = begin; i < end; ++i) {
        const auto& e = entries[i];
        if (!e.ok) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = entries[*best];
        if (e.value < b.value || (e.value == b.value && (e.lambda > b.lambda ||
                                                         (e.lambda == b.lambda && e.rank < b.rank)))) {
            best = i;
        }
    }
    return best;
}

std::string failure_summary(const std::vector<CriterionEntry>& entries, std::size_t begin, std::size_t end)
{
    std::string msg;
    for (std::size_t i = begin; i < end; ++i) {
        if (entries[i].ok) continue;
        msg += "\n  lambda=" + std::to_string(entries[i].lambda) + " rank=" + std::to_string(entries[i].rank) +
               ": " + entries[i].error;
    }
    return msg;
}

} // namespace

TuningResult select_two_step(const LagDesign& design, const TuningGrid& grid, const RegularizationConfig& cfg,
                             Criterion criterion)
{
    grid.validate(design);
    cfg.validate();
    const DesignMoments moments = compute_moments(design);
    RegularizationConfig inner = cfg;
    inner.threads = 1;

    TuningResult result;
    const std::size_t n_lambda = grid.lambda_values.size();
    const std::size_t n_rank = grid.rank_values.size();
    const std::size_t lattice = n_lambda * n_rank;
    result.criterion_table.resize(lattice + n_lambda);

    // Step 1: full lattice.
    parallel_for(lattice, cfg.threads, [&](std::size_t idx) {
        CriterionEntry& e = result.criterion_table[idx];
        e.stage = 1;
        e.lambda = grid.lambda_values[idx / n_rank];
        e.rank = grid.rank_values[idx % n_rank];
        try {
            const ModelFit fit = fit_empirical(design, moments, e.lambda, e.rank, inner);
            e.value = evaluate_criterion(design, fit, e.rank, criterion, grid.sparsity_penalty);
        } catch (const std::exception& ex) {
            e.ok = false;
            e.error = ex.what();
        }
    });
    const auto step1 = best_entry(result.criterion_table, 0, lattice);
    if (!step1) {
        throw NumericError("tuning failed at every lattice point:" +
                           failure_summary(result.criterion_table, 0, lattice));
    }
    result.step1_lambda = result.criterion_table[*step1].lambda;
    result.step1_rank = result.criterion_table[*step1].rank;

    // Step 2: lambda line at the inflated rank.
    int rank2 = (design.lags + 1) * result.step1_rank;
    const int max_rank = static_cast<int>(std::min(design.effective_rows(), design.series()));
    if (rank2 > max_rank) {
        rank2 = max_rank;
        result.rank_clamped = true;
    }
    std::vector<std::optional<ModelFit>> fits(n_lambda);
    parallel_for(n_lambda, cfg.threads, [&](std::size_t i) {
        CriterionEntry& e = result.criterion_table[lattice + i];
        e.stage = 2;
        e.lambda = grid.lambda_values[i];
        e.rank = rank2;
        try {
            fits[i] = fit_empirical(design, moments, e.lambda, rank2, inner);
            e.value = evaluate_criterion(design, *fits[i], rank2, criterion, grid.sparsity_penalty);
        } catch (const std::exception& ex) {
            e.ok = false;
            e.error = ex.what();
        }
    });
    const auto step2 = best_entry(result.criterion_table, lattice, lattice + n_lambda);
    if (!step2) {
        throw NumericError("tuning failed at every step-2 point:" +
                           failure_summary(result.criterion_table, lattice, lattice + n_lambda));
    }
    result.lambda_opt = result.criterion_table[*step2].lambda;
    result.rank_opt = rank2;
    result.fit = std::move(*fits[*step2 - lattice]);
    return result;
}

} // namespace lagfactor
