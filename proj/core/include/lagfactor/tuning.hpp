#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lagfactor/core.hpp"
#include "lagfactor/estimator.hpp"

namespace lagfactor {

enum class Criterion { Pic, PicStar };

std::string to_string(Criterion c);
Criterion criterion_from_string(const std::string& name);

/// How ||B||_0 enters the criteria: PerSeries charges (log T / T) ||B||_0 / p,
/// the average support size per equation, putting it on the same per-entry
/// scale as residual variance and the rank term. Total charges the raw count.
enum class SparsityPenalty { PerSeries, Total };

struct TuningGrid {
    std::vector<double> lambda_values; // ascending, positive
    std::vector<int> rank_values;      // ascending, positive
    int lags = 1;
    SparsityPenalty sparsity_penalty = SparsityPenalty::PerSeries;

    void validate(const LagDesign& design) const;
};

/// Smallest lambda giving B = 0 when Theta = 0: ||X_{T-1}^T X_T / T_d||_max.
double lambda_max(const LagDesign& design);

/// 20 log-spaced lambdas on [0.01 lambda_max, lambda_max]; ranks 1..min(10, min(T_d, p) / 2).
TuningGrid default_grid(const LagDesign& design, int lambda_count = 20, int max_rank = 10);

/// Panel information criterion. `rank` is the rank the fit was computed with.
double pic(const LagDesign& design, const ModelFit& fit, int rank,
           SparsityPenalty penalty = SparsityPenalty::PerSeries);

/// log sigma^2 variant; nullopt signals a zero-residual fit where the
/// logarithm is undefined.
std::optional<double> pic_star(const LagDesign& design, const ModelFit& fit, int rank,
                               SparsityPenalty penalty = SparsityPenalty::PerSeries);

struct CriterionEntry {
    int stage = 1; // 1 = lattice, 2 = lambda line at the inflated rank
    double lambda = 0.0;
    int rank = 0;
    double value = 0.0; // -inf for degenerate perfect fits under PIC*
    bool ok = true;
    std::string error;
};

struct TuningResult {
    double lambda_opt = 0.0;
    int rank_opt = 0;
    double step1_lambda = 0.0;
    int step1_rank = 0;
    bool rank_clamped = false;
    std::vector<CriterionEntry> criterion_table;
    ModelFit fit; // fit at (lambda_opt, rank_opt)
};

/// Two-step selection: minimize the criterion over the lattice to get
/// (lambda0, r0); fix rank (d + 1) r0, clamped to min(T_d, p), and minimize
/// over the same lambda grid. Ties go to the larger lambda, then the smaller
/// rank. Grid points are evaluated on cfg.threads workers.
TuningResult select_two_step(const LagDesign& design, const TuningGrid& grid, const RegularizationConfig& cfg,
                             Criterion criterion);

} // namespace lagfactor
