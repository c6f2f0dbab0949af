#include "lagfactor/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "lagfactor/error.hpp"
#include "lagfactor/linalg.hpp"

namespace lagfactor {

namespace {

constexpr int kBurnIn = 200;

Matrix uniform_matrix(Index rows, Index cols, double lo, double hi, Rng& rng)
{
    std::uniform_real_distribution<double> unif(lo, hi);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = unif(rng);
    }
    return m;
}

Matrix normal_matrix(Index rows, Index cols, Rng& rng)
{
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    }
    return m;
}

// Unscaled sparse square block: `strong` entries per row at random positions
// drawn from +-Unif[m_b - 0.1, m_b + 0.1]; weak kind fills the rest with
// Unif[-0.1 m_b, 0.1 m_b].
SparseDraw draw_sparse_block(int p, int strong, SparsityKind kind, double m_b, Rng& rng)
{
    SparseDraw out{Matrix::Zero(p, p), Matrix::Zero(p, p)};
    std::uniform_real_distribution<double> magnitude(m_b - 0.1, m_b + 0.1);
    std::uniform_real_distribution<double> weak(-0.1 * m_b, 0.1 * m_b);
    std::bernoulli_distribution sign(0.5);
    std::vector<int> cols(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
        std::iota(cols.begin(), cols.end(), 0);
        std::shuffle(cols.begin(), cols.end(), rng);
        for (int k = 0; k < strong; ++k) {
            const int j = cols[static_cast<std::size_t>(k)];
            out.b(i, j) = (sign(rng) ? 1.0 : -1.0) * magnitude(rng);
        }
        if (kind == SparsityKind::Weak) {
            for (int k = strong; k < p; ++k) {
                const int j = cols[static_cast<std::size_t>(k)];
                out.b(i, j) = weak(rng);
                out.weak_mask(i, j) = 1.0;
            }
        }
    }
    return out;
}

// Scales B_k by c^k so that every companion eigenvalue is multiplied by c.
void scale_companion(Matrix& stacked, int lags, double c)
{
    const Index p = stacked.rows();
    for (int k = 1; k <= lags; ++k) stacked.middleCols((k - 1) * p, p) *= std::pow(c, k);
}

// Rows r_t = sum_k A_k r_{t-k} + shock_t from a zero start; `shocks` has one
// row per step.
Matrix run_var(const Matrix& stacked, int lags, const Matrix& shocks)
{
    const Index n = shocks.rows();
    const Index dim = shocks.cols();
    Matrix out = Matrix::Zero(n, dim);
    for (Index t = 0; t < n; ++t) {
        Vector next = shocks.row(t).transpose();
        for (int k = 1; k <= lags && t - k >= 0; ++k) {
            next.noalias() += stacked.middleCols((k - 1) * dim, dim) * out.row(t - k).transpose();
        }
        out.row(t) = next.transpose();
    }
    return out;
}

} // namespace

void SimulationSetting::validate() const
{
    if (p < 1 || T < 2) throw ValidationError("setting " + id + ": need p >= 1 and T >= 2");
    if (kind == DgpKind::StateSpace) {
        if (dim_u < 1 || dim_u > dim_f || dim_f > p) {
            throw ValidationError("setting " + id + ": need 1 <= dim_u <= dim_F <= p");
        }
        return;
    }
    if (K < 1 || q < 1 || lags < 1) throw ValidationError("setting " + id + ": K, q and d must be >= 1");
    if (T < lags + 2) throw ValidationError("setting " + id + ": T too small for the lag order");
    if (!(rho_b >= 0.0 && rho_b < 1.0)) throw ValidationError("setting " + id + ": rho_B must lie in [0, 1)");
    if (!(row_density > 0.0 && row_density <= 1.0) || std::lround(row_density * p) < 1) {
        throw ValidationError("setting " + id + ": row density must give at least one entry per row");
    }
    if (!(m_b > 0.1)) throw ValidationError("setting " + id + ": m_B must exceed 0.1");
    if (!(rho_f_low > 0.0 && rho_f_low <= rho_f_high && rho_f_high < 1.0)) {
        throw ValidationError("setting " + id + ": factor radius range must lie in (0, 1)");
    }
    if (!(sigma_eta >= 0.0)) throw ValidationError("setting " + id + ": sigma_eta must be >= 0");
    if (noise.law == NoiseLaw::StudentT && !(noise.df > 2.0)) {
        throw ValidationError("setting " + id + ": student-t needs df > 2");
    }
    if (noise.structure == SigmaStructure::Toeplitz && !(noise.toeplitz >= 0.0 && noise.toeplitz < 1.0)) {
        throw ValidationError("setting " + id + ": Toeplitz parameter must lie in [0, 1)");
    }
}

std::vector<std::string> setting_names()
{
    return {"S0", "S1", "S2", "S3", "S4", "S5", "S6", "F1", "F2", "F3", "F4", "D2"};
}

SimulationSetting setting_by_name(const std::string& name)
{
    SimulationSetting s;
    s.id = name;
    const NoiseSpec toeplitz{SigmaStructure::Toeplitz, 0.2, NoiseLaw::Gaussian, 0.0};
    auto lagadj = [&](int p, double nnz, SparsityKind kind, double rho, int K, int q, double ratio) {
        s.kind = DgpKind::LagAdjusted;
        s.p = p;
        s.T = 200;
        s.row_density = nnz / p;
        s.sparsity = kind;
        s.rho_b = rho;
        s.K = K;
        s.q = q;
        s.strength_ratio = ratio;
    };
    auto state_space = [&](int p, int dim_u, int dim_f) {
        s.kind = DgpKind::StateSpace;
        s.p = p;
        s.T = 200;
        s.dim_u = dim_u;
        s.dim_f = dim_f;
        s.K = dim_f;
    };
    if (name == "S0") {
        lagadj(100, 2, SparsityKind::Exact, 0.7, 2, 1, 3.0 / 2.0);
    } else if (name == "S1") {
        lagadj(100, 5, SparsityKind::Weak, 0.7, 2, 1, 2.0);
        s.noise = toeplitz;
    } else if (name == "S2") {
        lagadj(300, 2, SparsityKind::Weak, 0.7, 5, 1, 2.0);
    } else if (name == "S3") {
        lagadj(200, 2, SparsityKind::Exact, 0.9, 5, 2, 2.0 / 3.0);
    } else if (name == "S4") {
        lagadj(200, 2, SparsityKind::Weak, 0.7, 5, 4, 3.0 / 2.0);
        s.noise = toeplitz;
    } else if (name == "S5") {
        lagadj(100, 2, SparsityKind::Exact, 0.7, 5, 1, 3.0 / 2.0);
        s.noise = NoiseSpec{SigmaStructure::Diagonal, 0.0, NoiseLaw::StudentT, 4.0};
    } else if (name == "S6") {
        lagadj(200, 2, SparsityKind::Weak, 0.7, 5, 1, 1.0);
        s.noise = NoiseSpec{SigmaStructure::Toeplitz, 0.2, NoiseLaw::StudentT, 8.0};
    } else if (name == "F1") {
        state_space(100, 2, 4);
    } else if (name == "F2") {
        state_space(100, 4, 4);
    } else if (name == "F3") {
        state_space(200, 4, 6);
    } else if (name == "F4") {
        state_space(300, 6, 6);
    } else if (name == "D2") {
        lagadj(50, 2, SparsityKind::Exact, 0.7, 2, 1, 3.0 / 2.0);
        s.T = 300;
        s.lags = 2;
    } else {
        throw ValidationError("unknown setting '" + name + "'");
    }
    return s;
}

SparseDraw gen_sparse_b(int p, double row_density, SparsityKind kind, double m_b, double rho_target, Rng& rng)
{
    return gen_sparse_var(p, 1, row_density, kind, m_b, rho_target, rng);
}

SparseDraw gen_sparse_var(int p, int lags, double row_density, SparsityKind kind, double m_b, double rho_target,
                          Rng& rng)
{
    if (p < 1 || lags < 1) throw ValidationError("gen_sparse_var: p and d must be >= 1");
    if (!(row_density > 0.0 && row_density <= 1.0)) throw ValidationError("row density must lie in (0, 1]");
    if (!(m_b > 0.1)) throw ValidationError("m_B must exceed 0.1");
    if (!(rho_target > 0.0 && rho_target < 1.0)) throw ValidationError("target spectral radius must lie in (0, 1)");
    const int strong = static_cast<int>(std::clamp<long>(std::lround(row_density * p), 1, p));

    for (int attempt = 0; attempt < 100; ++attempt) {
        SparseDraw out{Matrix(p, lags * p), Matrix(p, lags * p)};
        for (int k = 0; k < lags; ++k) {
            SparseDraw block = draw_sparse_block(p, strong, kind, m_b, rng);
            out.b.middleCols(k * p, p) = block.b;
            out.weak_mask.middleCols(k * p, p) = block.weak_mask;
        }
        const double rho = spectral_radius(companion_matrix(out.b, lags));
        if (rho <= 1e-12) continue;
        scale_companion(out.b, lags, rho_target / rho);
        return out;
    }
    throw NumericError("gen_sparse_var: 100 draws with zero spectral radius");
}

Matrix gen_factor_var(int K, int q, double rho, Rng& rng)
{
    if (K < 1 || q < 1) throw ValidationError("gen_factor_var: K and q must be >= 1");
    for (int attempt = 0; attempt < 100; ++attempt) {
        Matrix phi = uniform_matrix(K, K * q, -1.0, 1.0, rng);
        const double r0 = spectral_radius(companion_matrix(phi, q));
        if (r0 <= 1e-12) continue;
        scale_companion(phi, q, rho / r0);
        return phi;
    }
    throw NumericError("gen_factor_var: 100 draws with zero spectral radius");
}

Matrix gen_factor_path(int K, int q, int T, double rho_low, double rho_high, double sigma_eta, Rng& rng)
{
    if (T < 1) throw ValidationError("gen_factor_path: T must be >= 1");
    std::uniform_real_distribution<double> radius(rho_low, rho_high);
    const Matrix phi = gen_factor_var(K, q, radius(rng), rng);
    const Matrix shocks = sigma_eta * normal_matrix(kBurnIn + T, K, rng);
    return run_var(phi, q, shocks).bottomRows(T);
}

Matrix gen_noise(int T, int p, const NoiseSpec& spec, Rng& rng)
{
    if (T < 1 || p < 1) throw ValidationError("gen_noise: T and p must be >= 1");
    Matrix z = normal_matrix(T, p, rng);
    if (spec.structure == SigmaStructure::Toeplitz) {
        if (!(spec.toeplitz >= 0.0 && spec.toeplitz < 1.0)) {
            throw ValidationError("Toeplitz parameter must lie in [0, 1)");
        }
        Matrix sigma(p, p);
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(spec.toeplitz, std::abs(i - j));
        }
        const Eigen::LLT<Matrix> llt(sigma);
        if (llt.info() != Eigen::Success) throw NumericError("Toeplitz covariance is not positive definite");
        z = z * llt.matrixL().transpose();
    }
    if (spec.law == NoiseLaw::StudentT) {
        if (!(spec.df > 2.0)) throw ValidationError("student-t noise needs df > 2");
        std::chi_squared_distribution<double> chi2(spec.df);
        const double rescale = std::sqrt((spec.df - 2.0) / spec.df);
        for (int t = 0; t < T; ++t) z.row(t) *= rescale / std::sqrt(chi2(rng) / spec.df);
    }
    return z;
}

SimulatedData gen_lagadj_dgp(const SimulationSetting& setting)
{
    setting.validate();
    if (setting.kind != DgpKind::LagAdjusted) throw ValidationError("gen_lagadj_dgp needs a lag-adjusted setting");
    Rng rng(setting.seed);
    const int p = setting.p;
    const int T = setting.T;
    const int d = setting.lags;
    const int K = setting.K;

    SparseDraw b = setting.rho_b > 0.0 ? gen_sparse_var(p, d, setting.row_density, setting.sparsity, setting.m_b,
                                                        setting.rho_b, rng)
                                       : SparseDraw{Matrix::Zero(p, d * p), Matrix::Zero(p, d * p)};

    // Loadings +-Unif[m - 0.1, m + 0.1] written as sign * (m + 0.1 w).
    Matrix sign(p, K);
    {
        std::bernoulli_distribution coin(0.5);
        for (int i = 0; i < p; ++i) {
            for (int k = 0; k < K; ++k) sign(i, k) = coin(rng) ? 1.0 : -1.0;
        }
    }
    const Matrix wiggle = uniform_matrix(p, K, -1.0, 1.0, rng);

    // f_0 .. f_{T+1}; idiosyncratic u_0 .. u_T.
    const Matrix f = gen_factor_path(K, setting.q, T + 2, setting.rho_f_low, setting.rho_f_high, setting.sigma_eta, rng);
    const Matrix eps = gen_noise(kBurnIn + T + 1, p, setting.noise, rng);
    const Matrix u = run_var(b.b, d, eps).bottomRows(T + 1);

    const Index rows = T + 1 - d; // design rows t = d .. T
    auto loading = [&](double m) { return Matrix(sign.array() * (m + 0.1 * wiggle.array())); };
    auto panel_values = [&](const Matrix& l) { return Matrix(f.topRows(T + 1) * l.transpose() + u); };
    auto hyperplane = [&](const Matrix& l) {
        Matrix theta = f.middleRows(d, rows) * l.transpose();
        for (int k = 1; k <= d; ++k) {
            theta.noalias() -= f.middleRows(d - k, rows) * (b.b.middleCols((k - 1) * p, p) * l).transpose();
        }
        return theta;
    };
    auto lag_term = [&](const Matrix& x) {
        Matrix out = Matrix::Zero(rows, p);
        for (int k = 1; k <= d; ++k) {
            out.noalias() += x.middleRows(d - k, rows) * b.b.middleCols((k - 1) * p, p).transpose();
        }
        return out;
    };
    auto strength = [&](double m) {
        const Matrix l = loading(m);
        const double denom = lag_term(panel_values(l)).squaredNorm();
        return denom > 0.0 ? hyperplane(l).squaredNorm() / denom : std::numeric_limits<double>::infinity();
    };

    double m_lambda = 1.0;
    if (setting.rho_b > 0.0 && setting.strength_ratio > 0.0) {
        const double target = setting.strength_ratio;
        double lo = std::log(1e-3);
        double hi = std::log(1e3);
        if (!(strength(std::exp(lo)) < target && strength(std::exp(hi)) > target)) {
            throw ValidationError("setting " + setting.id + ": strength ratio " + std::to_string(target) +
                                  " is not reachable by the loading scale");
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double r = strength(std::exp(mid));
            m_lambda = std::exp(mid);
            if (std::abs(r / target - 1.0) < 1e-3) break;
            (r < target ? lo : hi) = mid;
        }
        if (std::abs(strength(m_lambda) / target - 1.0) > 0.15) {
            throw ValidationError("setting " + setting.id + ": strength calibration failed");
        }
    }

    const Matrix l = loading(m_lambda);
    const Matrix x = panel_values(l);

    GroundTruth truth;
    truth.b_true = b.b;
    truth.weak_mask = b.weak_mask;
    truth.lambda_true.resize(p, (d + 1) * K);
    truth.lambda_true.leftCols(K) = l;
    for (int k = 1; k <= d; ++k) truth.lambda_true.middleCols(k * K, K) = -b.b.middleCols((k - 1) * p, p) * l;
    truth.factor_path = f.topRows(T + 1);
    truth.stacked_factors.resize(rows, (d + 1) * K);
    for (int k = 0; k <= d; ++k) truth.stacked_factors.middleCols(k * K, K) = f.middleRows(d - k, rows);
    truth.theta_true = hyperplane(l);
    truth.oracle_next = l * f.row(T + 1).transpose();
    for (int k = 1; k <= d; ++k) {
        truth.oracle_next += b.b.middleCols((k - 1) * p, p) * u.row(T + 1 - k).transpose();
    }
    const double lag_energy = lag_term(x).squaredNorm();
    truth.realized_strength = lag_energy > 0.0 ? truth.theta_true.squaredNorm() / lag_energy : 0.0;
    truth.loading_scale = m_lambda;
    return SimulatedData{TimeSeriesPanel(x), std::move(truth)};
}

SimulatedData gen_forni_dgp(int p, int dim_u, int dim_f, int T, Rng& rng)
{
    if (dim_u < 1 || dim_u > dim_f || dim_f > p) throw ValidationError("need 1 <= dim_u <= dim_F <= p");
    if (T < 2) throw ValidationError("gen_forni_dgp: T must be >= 2");
    const Matrix loading = uniform_matrix(p, dim_f, -1.0, 1.0, rng);
    const Matrix impact = uniform_matrix(dim_f, dim_u, -1.0, 1.0, rng);
    std::uniform_real_distribution<double> norm_target(0.4, 0.9);
    const double target = norm_target(rng);
    Matrix transition = uniform_matrix(dim_f, dim_f, -1.0, 1.0, rng);
    transition *= target / operator_norm(transition);

    const Matrix shocks = normal_matrix(kBurnIn + T + 2, dim_u, rng) * impact.transpose();
    const Matrix factors = run_var(transition, 1, shocks).bottomRows(T + 2); // F_0 .. F_{T+1}
    const Matrix xi = normal_matrix(T + 1, p, rng);
    const Matrix x = factors.topRows(T + 1) * loading.transpose() + xi;

    GroundTruth truth;
    truth.b_true = Matrix::Zero(p, p);
    truth.weak_mask = Matrix::Zero(p, p);
    truth.lambda_true = loading;
    truth.factor_path = factors.topRows(T + 1);
    truth.stacked_factors = factors.middleRows(1, T);
    truth.theta_true = truth.stacked_factors * loading.transpose();
    truth.oracle_next = loading * factors.row(T + 1).transpose();
    return SimulatedData{TimeSeriesPanel(x), std::move(truth)};
}

SimulatedData simulate(const SimulationSetting& setting)
{
    setting.validate();
    if (setting.kind == DgpKind::StateSpace) {
        Rng rng(setting.seed);
        return gen_forni_dgp(setting.p, setting.dim_u, setting.dim_f, setting.T, rng);
    }
    return gen_lagadj_dgp(setting);
}

double simulate_var_max_norm(const Matrix& stacked_b, int lags, int steps, Rng& rng)
{
    const Matrix path = run_var(stacked_b, lags, normal_matrix(steps, stacked_b.rows(), rng));
    return path.cwiseAbs().maxCoeff();
}

} // namespace lagfactor
