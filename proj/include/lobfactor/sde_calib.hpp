#pragma once

// Calibration of the linear SDE  d xi = (A xi + a) dt + Sigma dW  from samples
// taken every l time units. The exact transition is Gaussian:
//     xi_{t+l} = B_l xi_t + b_l + eps,   eps ~ N(0, V_l)
// with B_l = exp(lA), b_l = int_0^l exp(sA) ds a, and V_l the covariance map
// of Q = Sigma Sigma^T. (B_l, b_l, V_l) is estimated by OLS and then inverted.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lobfactor/impact_fit.hpp"
#include "lobfactor/matfun.hpp"
#include "lobfactor/time.hpp"

namespace lobfactor {

/// Time-ordered states, one row per sample. A transition (t, t+1) is used only
/// when both samples are on the same day and exactly `interval_ns` apart.
struct StateSeries {
    std::vector<Timestamp> ts;
    Mat xi;                       // rows: samples, cols: factors
    std::int64_t interval_ns = 600 * kNanosPerSecond;
    double step = 1.0;            // l, in model time units

    Eigen::Index dim() const { return xi.cols(); }
    std::size_t size() const { return ts.size(); }
};

/// Row indices t with (t, t+1) a valid within-day transition.
inline std::vector<std::size_t> transition_starts(const StateSeries& s) {
    if (static_cast<Eigen::Index>(s.ts.size()) != s.xi.rows()) {
        throw Error("sde_calib.BadSeries", "timestamps and states have different lengths");
    }
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t + 1 < s.ts.size(); ++t) {
        if (s.ts[t + 1] - s.ts[t] == s.interval_ns && day_index(s.ts[t]) == day_index(s.ts[t + 1])) {
            out.push_back(t);
        }
    }
    return out;
}

/// xi = (ln mid, ln beta-, ln beta+) per observation.
inline StateSeries state_series_from_observations(std::span<const ImpactObservation> obs, std::int64_t interval_ns,
                                                  double step = 1.0) {
    StateSeries s;
    s.interval_ns = interval_ns;
    s.step = step;
    s.xi.resize(static_cast<Eigen::Index>(obs.size()), 3);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        s.ts.push_back(obs[i].ts);
        s.xi.row(static_cast<Eigen::Index>(i)) << std::log(obs[i].mid), std::log(obs[i].beta_minus),
            std::log(obs[i].beta_plus);
    }
    if (!s.xi.allFinite()) throw Error("sde_calib.BadSeries", "state series has non-finite entries");
    return s;
}

/// The (ln beta-, ln beta+) block of a three-factor series.
inline StateSeries liquidity_block(const StateSeries& s) {
    StateSeries out = s;
    out.xi = s.xi.rightCols(2);
    return out;
}

struct DiscreteParams {
    Mat B;
    Vec b;
    Mat V;
};

struct SdeParams {
    Mat A;
    Vec a;
    Mat sigma;  // symmetric PSD

    Mat q() const { return sigma * sigma.transpose(); }
    Eigen::Index dim() const { return A.rows(); }
};

struct DiscreteEstimate {
    DiscreteParams params;
    Mat se_B;
    Vec se_b;
    Mat xtx_inv;  // (X^T X)^{-1} of the design [xi_t, 1]
    std::size_t n_pairs = 0;
};

struct EstimateOptions {
    std::size_t min_pairs = 20;
    /// Restrict the first column of B to e_1, i.e. the first column of A to zero.
    bool zero_first_column = false;
};

inline DiscreteEstimate estimate_discrete(const StateSeries& series, EstimateOptions opt = {}) {
    const auto starts = transition_starts(series);
    const auto n = series.dim();
    const auto npairs = static_cast<Eigen::Index>(starts.size());
    if (starts.size() < opt.min_pairs) {
        throw Error("sde_calib.TooFewPairs", "need at least " + std::to_string(opt.min_pairs) +
                                                 " within-day transitions, have " + std::to_string(starts.size()));
    }
    const Eigen::Index first_free = opt.zero_first_column ? 1 : 0;
    const Eigen::Index k = n - first_free + 1;  // regressors incl. intercept

    Mat x(npairs, k);
    Mat y(npairs, n);
    for (Eigen::Index r = 0; r < npairs; ++r) {
        const auto t = static_cast<Eigen::Index>(starts[static_cast<std::size_t>(r)]);
        x.row(r).head(k - 1) = series.xi.row(t).segment(first_free, n - first_free);
        x(r, k - 1) = 1.0;
        y.row(r) = series.xi.row(t + 1);
        if (opt.zero_first_column) y(r, 0) -= series.xi(t, 0);
    }

    // Rank test on the column-normalized design.
    Mat xn = x;
    for (Eigen::Index c = 0; c < k; ++c) {
        const double norm = xn.col(c).norm();
        if (norm > 0.0) xn.col(c) /= norm;
    }
    Eigen::JacobiSVD<Mat> svd(xn);
    const auto& sv = svd.singularValues();
    if (!(sv(k - 1) > 1e-10 * sv(0))) {
        throw Error("sde_calib.CollinearRegressors", "design matrix [xi_t, 1] is rank deficient");
    }

    const Mat coef = x.colPivHouseholderQr().solve(y);  // k x n
    const Mat resid = y - x * coef;
    if (npairs <= k) throw Error("sde_calib.TooFewPairs", "no residual degrees of freedom");
    const Mat v = symmetrize(resid.transpose() * resid / static_cast<double>(npairs - k));
    const Mat xtx_inv = (x.transpose() * x).ldlt().solve(Mat::Identity(k, k));

    DiscreteEstimate est;
    est.n_pairs = starts.size();
    est.xtx_inv = xtx_inv;
    est.params.B = Mat::Zero(n, n);
    est.se_B = Mat::Zero(n, n);
    if (opt.zero_first_column) est.params.B(0, 0) = 1.0;
    est.params.B.rightCols(n - first_free) = coef.topRows(k - 1).transpose();
    est.params.b = coef.row(k - 1).transpose();
    est.params.V = v;
    est.se_b.resize(n);
    for (Eigen::Index eq = 0; eq < n; ++eq) {
        for (Eigen::Index c = 0; c < k - 1; ++c) {
            est.se_B(eq, c + first_free) = std::sqrt(v(eq, eq) * xtx_inv(c, c));
        }
        est.se_b(eq) = std::sqrt(v(eq, eq) * xtx_inv(k - 1, k - 1));
    }
    return est;
}

/// Exact forward map (A, a, Sigma) -> (B_l, b_l, V_l).
inline DiscreteParams discretize(const SdeParams& p, double l) {
    return {expm(l * p.A), drift_integral(p.A, l) * p.a, covariance_map(p.A, p.q(), l)};
}

/// Inverse map: A = logm(B)/l, a = (int_0^l exp(sA) ds)^{-1} b, Q from V.
inline SdeParams recover_continuous(const DiscreteParams& dp, double l) {
    if (!(l > 0.0)) throw Error("sde_calib.InvalidStep", "step must be positive");
    SdeParams p;
    p.A = logm(dp.B) / l;
    const Mat integral = drift_integral(p.A, l);
    Eigen::FullPivLU<Mat> lu(integral);
    if (!lu.isInvertible()) throw Error("sde_calib.SingularDriftIntegral", "drift integral is not invertible");
    p.a = lu.solve(dp.b);
    p.sigma = invert_covariance_map(p.A, dp.V, l).sigma;
    return p;
}

struct ContinuousStdErrors {
    Mat A;
    Vec a;
    Mat Q;
};

namespace detail {

// (A, a, Q) packed as one vector, with Q taken from the raw linear solve (no PSD
// projection) so the map is smooth for finite differences.
inline Vec continuous_vector(const Mat& B, const Vec& b, const Mat& V, double l) {
    const auto n = B.rows();
    const Mat A = logm(B) / l;
    const Vec a = drift_integral(A, l).fullPivLu().solve(b);
    const Mat Q = symmetrize(unvec(drift_integral(kronecker_sum(A), l).fullPivLu().solve(vec(symmetrize(V))), n));
    Vec out(n * n + n + n * (n + 1) / 2);
    out.head(n * n) = vec(A);
    out.segment(n * n, n) = a;
    Eigen::Index idx = n * n + n;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) out(idx++) = Q(i, j);
    }
    return out;
}

} // namespace detail

/// Delta-method standard errors of (A, a, Q): OLS covariance of (B, b), the
/// Gaussian large-sample covariance of V, and a central-difference Jacobian.
inline ContinuousStdErrors continuous_std_errors(const DiscreteEstimate& est, double l,
                                                 bool zero_first_column = false) {
    const auto& dp = est.params;
    const auto n = dp.B.rows();
    const Eigen::Index nv = n * (n + 1) / 2;
    const Eigen::Index nin = n * n + n + nv;
    const Eigen::Index first_free = zero_first_column ? 1 : 0;
    const Eigen::Index k = n - first_free + 1;
    const double npairs = static_cast<double>(est.n_pairs);

    // Input covariance. Coefficient for equation j, regressor r: B(j, r + first_free) or b(j).
    auto coef_index = [&](Eigen::Index eq, Eigen::Index r) -> Eigen::Index {
        if (r == k - 1) return n * n + eq;
        return (r + first_free) * n + eq;  // column-major vec(B)
    };
    Mat cov_in = Mat::Zero(nin, nin);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index m = 0; m < n; ++m) {
            for (Eigen::Index r = 0; r < k; ++r) {
                for (Eigen::Index s = 0; s < k; ++s) {
                    cov_in(coef_index(j, r), coef_index(m, s)) = dp.V(j, m) * est.xtx_inv(r, s);
                }
            }
        }
    }
    std::vector<std::pair<Eigen::Index, Eigen::Index>> vech;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) vech.emplace_back(i, j);
    }
    for (std::size_t u = 0; u < vech.size(); ++u) {
        for (std::size_t w = 0; w < vech.size(); ++w) {
            const auto [i, j] = vech[u];
            const auto [p, q] = vech[w];
            cov_in(n * n + n + static_cast<Eigen::Index>(u), n * n + n + static_cast<Eigen::Index>(w)) =
                (dp.V(i, p) * dp.V(j, q) + dp.V(i, q) * dp.V(j, p)) / npairs;
        }
    }

    auto unpack = [&](const Vec& theta, Mat& B, Vec& b, Mat& V) {
        B = unvec(theta.head(n * n), n);
        b = theta.segment(n * n, n);
        V.resize(n, n);
        for (std::size_t u = 0; u < vech.size(); ++u) {
            const auto [i, j] = vech[u];
            V(i, j) = V(j, i) = theta(n * n + n + static_cast<Eigen::Index>(u));
        }
    };
    Vec theta(nin);
    theta.head(n * n) = vec(dp.B);
    theta.segment(n * n, n) = dp.b;
    for (std::size_t u = 0; u < vech.size(); ++u) {
        theta(n * n + n + static_cast<Eigen::Index>(u)) = dp.V(vech[u].first, vech[u].second);
    }

    const Eigen::Index nout = n * n + n + nv;
    Mat jac = Mat::Zero(nout, nin);
    for (Eigen::Index c = 0; c < nin; ++c) {
        if (cov_in(c, c) == 0.0) continue;
        const double h = 1e-6 * std::max(1.0, std::abs(theta(c)));
        Vec tp = theta, tm = theta;
        tp(c) += h;
        tm(c) -= h;
        Mat B;
        Vec b;
        Mat V;
        unpack(tp, B, b, V);
        const Vec fp = detail::continuous_vector(B, b, V, l);
        unpack(tm, B, b, V);
        const Vec fm = detail::continuous_vector(B, b, V, l);
        jac.col(c) = (fp - fm) / (2.0 * h);
    }
    const Mat cov_out = jac * cov_in * jac.transpose();
    const Vec se = cov_out.diagonal().cwiseMax(0.0).cwiseSqrt();

    ContinuousStdErrors out;
    out.A = unvec(se.head(n * n), n);
    out.a = se.segment(n * n, n);
    out.Q.resize(n, n);
    for (std::size_t u = 0; u < vech.size(); ++u) {
        const auto [i, j] = vech[u];
        out.Q(i, j) = out.Q(j, i) = se(n * n + n + static_cast<Eigen::Index>(u));
    }
    return out;
}

struct Calibration {
    SdeParams params;
    DiscreteEstimate discrete;
    ContinuousStdErrors se;
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd eigenvectors;  // columns, unit norm
    bool stationary = false;        // all eigenvalues of A have negative real part
    bool near_singular_B = false;   // some |eigenvalue of B| < 1e-3
    double step = 1.0;
};

/// Eigen-decomposition sorted by decreasing real part, eigenvectors normalized with
/// their largest-magnitude component real and positive.
inline std::pair<Eigen::VectorXcd, Eigen::MatrixXcd> spectral_decomposition(const Mat& A) {
    Eigen::EigenSolver<Mat> es(A);
    if (es.info() != Eigen::Success) throw Error("sde_calib.EigenFailed", "eigen-decomposition of A failed");
    const auto n = A.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    const Eigen::VectorXcd ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return ev(i).real() > ev(j).real(); });
    Eigen::VectorXcd values(n);
    Eigen::MatrixXcd vectors(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto src = order[static_cast<std::size_t>(c)];
        values(c) = ev(src);
        Eigen::VectorXcd v = es.eigenvectors().col(src);
        Eigen::Index big = 0;
        v.cwiseAbs().maxCoeff(&big);
        v *= std::abs(v(big)) / v(big);
        vectors.col(c) = v / v.norm();
    }
    return {values, vectors};
}

struct CalibrateOptions {
    EstimateOptions estimate;
    bool compute_std_errors = true;
};

inline Calibration calibrate(const StateSeries& series, CalibrateOptions opt = {}) {
    Calibration cal;
    cal.step = series.step;
    cal.discrete = estimate_discrete(series, opt.estimate);
    {
        Eigen::EigenSolver<Mat> es(cal.discrete.params.B, false);
        cal.near_singular_B = es.eigenvalues().cwiseAbs().minCoeff() < 1e-3;
    }
    cal.params = recover_continuous(cal.discrete.params, series.step);
    std::tie(cal.eigenvalues, cal.eigenvectors) = spectral_decomposition(cal.params.A);
    cal.stationary = (cal.eigenvalues.real().array() < 0.0).all();
    if (opt.compute_std_errors) {
        cal.se = continuous_std_errors(cal.discrete, series.step, opt.estimate.zero_first_column);
    }
    return cal;
}

/// Two-factor Ornstein-Uhlenbeck form d theta = Gamma (mu - theta) dt + Sigma dW.
struct OrnsteinUhlenbeck {
    Mat gamma;
    Vec mu;
    Mat sigma;
};

inline OrnsteinUhlenbeck to_mean_reversion_form(const SdeParams& p) {
    Eigen::FullPivLU<Mat> lu(p.A);
    if (!lu.isInvertible()) throw Error("sde_calib.SingularA", "A is singular; no mean level exists");
    return {-p.A, Vec(-lu.solve(p.a)), p.sigma};
}

/// Model 1: calibrate only the (ln beta-, ln beta+) block of a three-factor series.
inline OrnsteinUhlenbeck calibrate_model1(const StateSeries& series) {
    const StateSeries block = series.dim() == 3 ? liquidity_block(series) : series;
    if (block.dim() != 2) throw Error("sde_calib.BadSeries", "model 1 needs a two-factor series");
    CalibrateOptions opt;
    opt.compute_std_errors = false;
    return to_mean_reversion_form(calibrate(block, opt).params);
}

} // namespace lobfactor
