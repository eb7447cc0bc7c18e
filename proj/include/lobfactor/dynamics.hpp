#pragma once

// Forward analysis of a calibrated linear SDE: equilibrium, stationary law,
// exact-transition simulation, impulse responses and model autocovariances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lobfactor/matfun.hpp"
#include "lobfactor/sde_calib.hpp"

namespace lobfactor {

inline bool is_stable(const Mat& A) {
    Eigen::EigenSolver<Mat> es(A, false);
    return (es.eigenvalues().real().array() < 0.0).all();
}

/// Solution of A xi + a = 0.
inline Vec equilibrium(const SdeParams& p) {
    Eigen::FullPivLU<Mat> lu(p.A);
    if (!lu.isInvertible()) throw Error("dynamics.SingularA", "A is singular; the model has no equilibrium");
    return lu.solve(Vec(-p.a));
}

/// V_inf solving A V + V A^T + Q = 0.
inline Mat stationary_covariance(const SdeParams& p) {
    if (!is_stable(p.A)) throw Error("dynamics.NotStable", "A has an eigenvalue with nonnegative real part");
    return solve_lyapunov(p.A, p.q());
}

/// Simulated paths, laid out as [path][step][factor]; step 0 is the initial state.
class PathArray {
public:
    PathArray(std::size_t n_paths, std::size_t steps, Eigen::Index dim)
        : n_paths_(n_paths), steps_(steps), dim_(dim),
          data_(n_paths * (steps + 1) * static_cast<std::size_t>(dim), 0.0) {}

    std::size_t n_paths() const noexcept { return n_paths_; }
    std::size_t steps() const noexcept { return steps_; }
    Eigen::Index dim() const noexcept { return dim_; }

    Eigen::Map<Vec> state(std::size_t path, std::size_t step) {
        return Eigen::Map<Vec>(data_.data() + offset(path, step), dim_);
    }
    Eigen::Map<const Vec> state(std::size_t path, std::size_t step) const {
        return Eigen::Map<const Vec>(data_.data() + offset(path, step), dim_);
    }
    std::span<const double> raw() const noexcept { return data_; }

private:
    std::size_t offset(std::size_t path, std::size_t step) const {
        return (path * (steps_ + 1) + step) * static_cast<std::size_t>(dim_);
    }

    std::size_t n_paths_;
    std::size_t steps_;
    Eigen::Index dim_;
    std::vector<double> data_;
};

/// Generator for path `path` of a run seeded with `seed`; streams are independent of the thread layout.
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x5eed1u};
    return std::mt19937_64(seq);
}

struct SimulationSpec {
    std::size_t steps = 1;
    double step = 1.0;  // l
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

/// Paths drawn with the exact Gaussian transition (B_l, b_l, V_l).
inline PathArray simulate(const SdeParams& p, const Vec& xi0, const SimulationSpec& spec) {
    if (spec.steps < 1) throw Error("dynamics.InvalidSpec", "steps must be at least 1");
    if (!(spec.step > 0.0)) throw Error("dynamics.InvalidSpec", "step must be positive");
    const auto n = p.dim();
    if (xi0.size() != n) throw Error("dynamics.InvalidSpec", "initial state has the wrong dimension");
    const DiscreteParams dp = discretize(p, spec.step);
    const Mat noise = psd_sqrt(dp.V);
    PathArray paths(spec.n_paths, spec.steps, n);

    auto run = [&](std::size_t begin, std::size_t end) {
        Vec z(n);
        for (std::size_t path = begin; path < end; ++path) {
            auto rng = path_rng(spec.seed, path);
            std::normal_distribution<double> normal;
            paths.state(path, 0) = xi0;
            for (std::size_t k = 1; k <= spec.steps; ++k) {
                for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
                paths.state(path, k) = dp.B * paths.state(path, k - 1) + dp.b + noise * z;
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(spec.n_paths)));
    if (jobs == 1) {
        run(0, spec.n_paths);
    } else {
        std::vector<std::jthread> workers;
        const std::size_t chunk = (spec.n_paths + jobs - 1) / jobs;
        for (unsigned j = 0; j < jobs; ++j) {
            const std::size_t begin = j * chunk;
            const std::size_t end = std::min(spec.n_paths, begin + chunk);
            if (begin < end) workers.emplace_back(run, begin, end);
        }
    }
    return paths;
}

enum class ResponseVariable : int { MidDrift = 0, LnBetaMinus = 1, LnBetaPlus = 2 };

inline const char* to_string(ResponseVariable v) {
    switch (v) {
    case ResponseVariable::MidDrift: return "mid_drift";
    case ResponseVariable::LnBetaMinus: return "ln_beta_minus";
    case ResponseVariable::LnBetaPlus: return "ln_beta_plus";
    }
    return "?";
}

struct ImpulseSpec {
    Eigen::Index shocked = 1;  // state index: 1 = ln beta-, 2 = ln beta+
    double magnitude = 1.0;    // in stationary standard deviations
    std::size_t horizon = 12;  // steps
    double step = 1.0;         // l
};

/// Median and 95% band per step (rows) and response variable (columns).
struct ResponsePath {
    Mat median;
    Mat lo95;
    Mat hi95;
};

inline constexpr double kZ975 = 1.959963984540054;

namespace detail {

inline void check_impulse(const SdeParams& p, const ImpulseSpec& spec) {
    if (p.dim() != 3) throw Error("dynamics.InvalidSpec", "impulse responses need the three-factor model");
    if (spec.shocked != 1 && spec.shocked != 2) {
        throw Error("dynamics.InvalidSpec", "shocked factor must be ln beta- (1) or ln beta+ (2)");
    }
    if (spec.magnitude < 0.0 || !std::isfinite(spec.magnitude)) {
        throw Error("dynamics.InvalidSpec", "shock magnitude must be nonnegative");
    }
    if (spec.horizon < 1) throw Error("dynamics.InvalidSpec", "horizon must be at least 1");
}

inline Vec shocked_state(const SdeParams& p, const ImpulseSpec& spec) {
    Vec xi0 = equilibrium(p);
    const Mat v_inf = stationary_covariance(p);
    xi0(spec.shocked) += spec.magnitude * std::sqrt(std::max(0.0, v_inf(spec.shocked, spec.shocked)));
    return xi0;
}

} // namespace detail

/// Analytic responses: the state at step k is Gaussian with mean
/// B^k xi_0 + sum_{j<k} B^j b and covariance V_{kl}; the mid-drift response is
/// the first coordinate of A xi_k + a. Bands are median -/+ 1.96 std.
inline ResponsePath impulse_response(const SdeParams& p, const ImpulseSpec& spec) {
    detail::check_impulse(p, spec);
    const Vec xi0 = detail::shocked_state(p, spec);
    const DiscreteParams dp = discretize(p, spec.step);
    const Mat q = p.q();
    const auto rows = static_cast<Eigen::Index>(spec.horizon + 1);

    ResponsePath out{Mat(rows, 3), Mat(rows, 3), Mat(rows, 3)};
    Vec mean = xi0;
    for (Eigen::Index k = 0; k < rows; ++k) {
        if (k > 0) mean = dp.B * mean + dp.b;
        const Mat cov = k == 0 ? Mat(Mat::Zero(3, 3)) : covariance_map(p.A, q, static_cast<double>(k) * spec.step);
        const Vec drift = p.A * mean + p.a;
        const Mat drift_cov = p.A * cov * p.A.transpose();
        const double m[3] = {drift(0), mean(1), mean(2)};
        const double s[3] = {std::sqrt(std::max(0.0, drift_cov(0, 0))), std::sqrt(std::max(0.0, cov(1, 1))),
                             std::sqrt(std::max(0.0, cov(2, 2)))};
        for (int v = 0; v < 3; ++v) {
            out.median(k, v) = m[v];
            out.lo95(k, v) = m[v] - kZ975 * s[v];
            out.hi95(k, v) = m[v] + kZ975 * s[v];
        }
    }
    return out;
}

/// Monte-Carlo counterpart of impulse_response: empirical median and 2.5%/97.5% quantiles.
inline ResponsePath impulse_response_mc(const SdeParams& p, const ImpulseSpec& spec, std::size_t n_paths,
                                        std::uint64_t seed, unsigned jobs = 1) {
    detail::check_impulse(p, spec);
    const Vec xi0 = detail::shocked_state(p, spec);
    const PathArray paths = simulate(p, xi0, {spec.horizon, spec.step, n_paths, seed, jobs});
    const auto rows = static_cast<Eigen::Index>(spec.horizon + 1);
    ResponsePath out{Mat(rows, 3), Mat(rows, 3), Mat(rows, 3)};
    std::vector<double> sample(n_paths);
    auto quantile = [&](double prob) {
        const double pos = prob * static_cast<double>(n_paths - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, n_paths - 1);
        return sample[lo] + (pos - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
    };
    for (Eigen::Index k = 0; k < rows; ++k) {
        for (int v = 0; v < 3; ++v) {
            for (std::size_t i = 0; i < n_paths; ++i) {
                const auto x = paths.state(i, static_cast<std::size_t>(k));
                sample[i] = v == 0 ? (p.A.row(0).dot(x) + p.a(0)) : x(v);
            }
            std::sort(sample.begin(), sample.end());
            out.median(k, v) = quantile(0.5);
            out.lo95(k, v) = quantile(0.025);
            out.hi95(k, v) = quantile(0.975);
        }
    }
    return out;
}

/// Gamma(k) = exp(k l A) V_inf for k = 0..max_lag.
inline std::vector<Mat> model_autocovariance(const SdeParams& p, std::size_t max_lag, double step) {
    const Mat v_inf = stationary_covariance(p);
    std::vector<Mat> out;
    out.reserve(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        out.push_back(k == 0 ? v_inf : Mat(expm(static_cast<double>(k) * step * p.A) * v_inf));
    }
    return out;
}

/// Steps until |deviation| first falls to half its initial value, linearly interpolated.
/// Returns infinity when it never does within the given horizon.
inline double half_life(std::span<const double> deviation) {
    if (deviation.empty() || deviation[0] == 0.0) return 0.0;
    const double target = std::abs(deviation[0]) / 2.0;
    for (std::size_t k = 1; k < deviation.size(); ++k) {
        const double prev = std::abs(deviation[k - 1]);
        const double cur = std::abs(deviation[k]);
        if (cur <= target) return static_cast<double>(k - 1) + (prev - target) / (prev - cur);
    }
    return std::numeric_limits<double>::infinity();
}

} // namespace lobfactor
