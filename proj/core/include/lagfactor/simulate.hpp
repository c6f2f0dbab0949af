#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lagfactor/core.hpp"

namespace lagfactor {

using Rng = std::mt19937_64;

enum class SparsityKind { Exact, Weak };
enum class NoiseLaw { Gaussian, StudentT };
enum class SigmaStructure { Diagonal, Toeplitz };
enum class DgpKind { LagAdjusted, StateSpace };

struct NoiseSpec {
    SigmaStructure structure = SigmaStructure::Diagonal;
    double toeplitz = 0.0; // a in Sigma_ij = a^|i-j|
    NoiseLaw law = NoiseLaw::Gaussian;
    double df = 0.0;       // student-t degrees of freedom
};

/// Full description of one synthetic design.
struct SimulationSetting {
    std::string id;
    DgpKind kind = DgpKind::LagAdjusted;
    int p = 100;
    int T = 200;
    int K = 2;             // number of dynamic factors f_t
    int q = 1;             // factor VAR order
    int lags = 1;          // idiosyncratic VAR order d
    double row_density = 0.02;
    SparsityKind sparsity = SparsityKind::Exact;
    double rho_b = 0.7;
    double rho_f_low = 0.6;
    double rho_f_high = 0.8;
    NoiseSpec noise;
    double strength_ratio = 1.5; // ||F Lambda^T||^2 : ||X_{T-1} B^T||^2
    double m_b = 0.5;
    double sigma_eta = 1.0;
    // State-space design only.
    int dim_u = 2;
    int dim_f = 4;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Named presets: S0..S6 (lag-adjusted), F1..F4 (state-space), D2 (VAR(2)).
SimulationSetting setting_by_name(const std::string& name);
std::vector<std::string> setting_names();

struct GroundTruth {
    Matrix b_true;      // p x dp
    Matrix weak_mask;   // p x dp, 1 on weak-support entries
    Matrix lambda_true; // p x (d+1)K, [L, -B_1 L, ..., -B_d L]; p x dim_F for state-space
    Matrix factor_path; // f_t for the T+1 sample rows, (T+1) x K
    Matrix stacked_factors; // F_t for the T_d design rows
    Matrix theta_true;  // T_d x p
    Vector oracle_next; // noise-free x_{T+1}
    double realized_strength = 0.0;
    double loading_scale = 1.0; // calibrated m_Lambda
};

struct SimulatedData {
    TimeSeriesPanel panel;
    GroundTruth truth;
};

struct SparseDraw {
    Matrix b;
    Matrix weak_mask;
};

/// Square sparse transition draw scaled to spectral radius rho_target.
SparseDraw gen_sparse_b(int p, double row_density, SparsityKind kind, double m_b, double rho_target, Rng& rng);

/// VAR(d) blocks, each with the given row density, jointly scaled
/// (B_k -> c^k B_k) so the companion spectral radius equals rho_target.
SparseDraw gen_sparse_var(int p, int lags, double row_density, SparsityKind kind, double m_b, double rho_target,
                          Rng& rng);

/// VAR(q) factor coefficients [Phi_1 ... Phi_q] with Unif[-1, 1] entries,
/// scaled so the companion spectral radius equals `rho`.
Matrix gen_factor_var(int K, int q, double rho, Rng& rng);

/// Factor path f_t of length T after a 200-step burn-in from zero. The
/// companion radius is drawn from Unif[rho_low, rho_high].
Matrix gen_factor_path(int K, int q, int T, double rho_low, double rho_high, double sigma_eta, Rng& rng);

/// T x p noise with row covariance Sigma (identity or Toeplitz), Gaussian or
/// student-t rescaled to covariance Sigma.
Matrix gen_noise(int T, int p, const NoiseSpec& spec, Rng& rng);

/// Lag-adjusted factor model X_t = L f_t + u_t, u_t = sum_k B_k u_{t-k} + e_t.
/// The loading scale is calibrated to the setting's strength ratio.
SimulatedData gen_lagadj_dgp(const SimulationSetting& setting);

/// State-space design X_t = L F_t + xi_t, F_t = D F_{t-1} + K u_t.
SimulatedData gen_forni_dgp(int p, int dim_u, int dim_f, int T, Rng& rng);

/// Dispatches on setting.kind with Rng seeded by setting.seed.
SimulatedData simulate(const SimulationSetting& setting);

/// Iterates x_t = sum_k B_k x_{t-k} + e_t with standard normal shocks for
/// `steps` steps and returns max_t ||x_t||_inf (stationarity sanity check).
double simulate_var_max_norm(const Matrix& stacked_b, int lags, int steps, Rng& rng);

} // namespace lagfactor
