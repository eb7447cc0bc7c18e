#pragma once

// Dense matrix functions for exact discretization of linear SDEs:
//   expm             scaling and squaring with Pade approximants
//   logm             real principal logarithm by inverse scaling and squaring
//   drift_integral   int_0^l exp(sA) ds
//   covariance_map   V_l = int_0^l exp(sA) Q exp(sA)^T ds and its inverse
// Sizes are small (n <= 3 in practice, n^2 for Kronecker forms).

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lobfactor/error.hpp"
#include "lobfactor/ode.hpp"

namespace lobfactor {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Above this condition number closed forms that divide by A fall back to ODE integration.
inline constexpr double kClosedFormMaxCondition = 1e5;
/// Eigenvalues of a recovered covariance below -kPsdTolerance signal misspecification.
inline constexpr double kPsdTolerance = 1e-10;

namespace detail {

inline void require_square(const Mat& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw Error("matfun.DimensionMismatch", std::string(what) + " must be square");
    }
    if (!m.allFinite()) throw Error("matfun.NonFinite", std::string(what) + " has non-finite entries");
}

inline double condition_number(const Mat& m) {
    if (m.size() == 0) return 1.0;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin == 0.0 ? std::numeric_limits<double>::infinity() : s(0) / smin;
}

// Pade numerator/denominator pieces (U odd, V even) of degree m.
inline void pade_terms(const Mat& a, int m, Mat& u, Mat& v) {
    const Mat ident = Mat::Identity(a.rows(), a.cols());
    const Mat a2 = a * a;
    switch (m) {
    case 3: {
        constexpr double b[] = {120., 60., 12., 1.};
        u = a * (b[3] * a2 + b[1] * ident);
        v = b[2] * a2 + b[0] * ident;
        return;
    }
    case 5: {
        constexpr double b[] = {30240., 15120., 3360., 420., 30., 1.};
        const Mat a4 = a2 * a2;
        u = a * (b[5] * a4 + b[3] * a2 + b[1] * ident);
        v = b[4] * a4 + b[2] * a2 + b[0] * ident;
        return;
    }
    case 7: {
        constexpr double b[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
        const Mat a4 = a2 * a2;
        const Mat a6 = a4 * a2;
        u = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
        v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
        return;
    }
    case 9: {
        constexpr double b[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                2162160.,     110880.,     3960.,       90.,         1.};
        const Mat a4 = a2 * a2;
        const Mat a6 = a4 * a2;
        const Mat a8 = a6 * a2;
        u = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
        v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
        return;
    }
    default: {
        constexpr double b[] = {64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
                                129060195264000.,   10559470521600.,    670442572800.,    33522128640.,
                                1323241920.,        40840800.,          960960.,          16380.,
                                182.,               1.};
        const Mat a4 = a2 * a2;
        const Mat a6 = a4 * a2;
        u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
        v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
        return;
    }
    }
}

// Gauss-Legendre nodes and weights on [0, 1].
template <int N>
const std::array<std::pair<double, double>, N>& gauss_legendre_01() {
    static const auto rule = [] {
        std::array<std::pair<double, double>, N> r{};
        for (int i = 0; i < N; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (N + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= N; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            r[i] = {(x + 1.0) / 2.0, w / 2.0};
        }
        return r;
    }();
    return rule;
}

// Principal square root by the Denman-Beavers iteration.
inline Mat sqrtm_denman_beavers(const Mat& a) {
    const auto n = a.rows();
    Mat y = a;
    Mat z = Mat::Identity(n, n);
    for (int it = 0; it < 100; ++it) {
        const Mat y_inv = y.partialPivLu().inverse();
        const Mat z_inv = z.partialPivLu().inverse();
        const Mat y_next = 0.5 * (y + z_inv);
        z = 0.5 * (z + y_inv);
        const double change = (y_next - y).cwiseAbs().colwise().sum().maxCoeff();
        y = y_next;
        if (change <= 1e-15 * y.cwiseAbs().colwise().sum().maxCoeff()) return y;
    }
    throw Error("matfun.SqrtNotConverged", "matrix square root iteration did not converge");
}

} // namespace detail

inline double norm1(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().colwise().sum().maxCoeff(); }

/// Matrix exponential (Higham's scaling and squaring with degree 3..13 Pade).
inline Mat expm(const Mat& m) {
    detail::require_square(m, "expm argument");
    const auto n = m.rows();
    if (n == 0) return m;
    constexpr std::array<std::pair<int, double>, 4> small = {
        {{3, 1.495585217958292e-2}, {5, 2.539398330063230e-1}, {7, 9.504178996162932e-1}, {9, 2.097847961257068e0}}};
    constexpr double theta13 = 5.371920351148152e0;

    const double norm = norm1(m);
    Mat u, v;
    int squarings = 0;
    bool done = false;
    for (const auto& [degree, theta] : small) {
        if (norm <= theta) {
            detail::pade_terms(m, degree, u, v);
            done = true;
            break;
        }
    }
    if (!done) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
        detail::pade_terms(m / std::ldexp(1.0, squarings), 13, u, v);
    }
    Mat result = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

/// Real principal logarithm. Requires no eigenvalue on the closed negative real axis.
inline Mat logm(const Mat& m) {
    detail::require_square(m, "logm argument");
    const auto n = m.rows();
    if (n == 0) return m;

    const double scale = std::max(norm1(m), std::numeric_limits<double>::min());
    Eigen::EigenSolver<Mat> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw Error("matfun.EigenFailed", "eigenvalue computation failed");
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::complex<double> lambda = es.eigenvalues()(i);
        if (std::abs(lambda) <= 1e-14 * scale) {
            throw Error("matfun.SingularInput", "logm argument is singular");
        }
        if (lambda.real() < 0.0 && std::abs(lambda.imag()) <= 1e-10 * std::abs(lambda)) {
            throw Error("matfun.NonPrincipalBranch",
                        "logm argument has eigenvalue " + std::to_string(lambda.real()) +
                            " on the negative real axis; no real principal logarithm");
        }
    }

    const Mat ident = Mat::Identity(n, n);
    Mat x = m;
    int roots = 0;
    while (norm1(x - ident) > 0.25) {
        if (++roots > 60) throw Error("matfun.SqrtNotConverged", "too many square roots in logm");
        x = detail::sqrtm_denman_beavers(x);
    }
    // log(I + Y) = int_0^1 Y (I + tY)^{-1} dt, evaluated by Gauss-Legendre (a diagonal Pade approximant).
    const Mat y = x - ident;
    Mat log_x = Mat::Zero(n, n);
    for (const auto& [node, weight] : detail::gauss_legendre_01<12>()) {
        log_x += weight * (ident + node * y).partialPivLu().solve(y);
    }
    return std::ldexp(1.0, roots) * log_x;
}

/// Closed form A^{-1}(exp(lA) - I). Throws when A is singular or badly conditioned.
inline Mat drift_integral_closed_form(const Mat& a, double l) {
    detail::require_square(a, "drift matrix");
    const auto n = a.rows();
    if (detail::condition_number(a) > kClosedFormMaxCondition) {
        throw Error("matfun.IllConditioned", "drift matrix too ill-conditioned for the closed form");
    }
    return a.partialPivLu().solve(expm(l * a) - Mat::Identity(n, n));
}

/// Integrates X' = I + A X, X(0) = 0, up to t = l.
inline Mat drift_integral_ivp(const Mat& a, double l, OdeTolerance tol = {}) {
    detail::require_square(a, "drift matrix");
    const auto n = a.rows();
    const Mat ident = Mat::Identity(n, n);
    return integrate_dopri5([&](double, const Mat& x) -> Mat { return ident + a * x; }, Mat(Mat::Zero(n, n)), 0.0,
                            l, tol);
}

/// int_0^l exp(sA) ds, by closed form when A is well conditioned, else by ODE integration.
inline Mat drift_integral(const Mat& a, double l) {
    detail::require_square(a, "drift matrix");
    if (!(l > 0.0)) throw Error("matfun.InvalidHorizon", "horizon must be positive");
    if (detail::condition_number(a) <= kClosedFormMaxCondition) return drift_integral_closed_form(a, l);
    return drift_integral_ivp(a, l);
}

/// K = A (+) A = I (x) A + A (x) I, so that K vec(V) = vec(A V + V A^T) for column-major vec.
inline Mat kronecker_sum(const Mat& a) {
    const auto n = a.rows();
    Mat k = Mat::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            // I (x) A places A on the diagonal blocks; A (x) I scales identity blocks by a(i, j).
            if (i == j) k.block(i * n, j * n, n, n) += a;
            k.block(i * n, j * n, n, n).diagonal().array() += a(i, j);
        }
    }
    return k;
}

inline Vec vec(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

inline Mat unvec(const Vec& v, Eigen::Index n) { return Eigen::Map<const Mat>(v.data(), n, n); }

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

/// Throws matfun.NotPSD unless q is symmetric positive semidefinite up to kPsdTolerance.
inline void require_psd(const Mat& q, const char* what) {
    detail::require_square(q, what);
    const double scale = std::max(1.0, norm1(q));
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw Error("matfun.NotPSD", std::string(what) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(q), Eigen::EigenvaluesOnly);
    if (q.size() > 0 && es.eigenvalues().minCoeff() < -kPsdTolerance * scale) {
        throw Error("matfun.NotPSD", std::string(what) + " has a negative eigenvalue");
    }
}

/// Symmetric PSD square root; negative rounding eigenvalues are treated as zero.
inline Mat psd_sqrt(const Mat& q) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(q));
    const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return symmetrize(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

/// V_l via vec(V_l) = K^{-1}(exp(lK) - I) vec(Q).
inline Mat covariance_map_kron(const Mat& a, const Mat& q, double l) {
    const auto n = a.rows();
    return symmetrize(unvec(drift_integral_closed_form(kronecker_sum(a), l) * vec(q), n));
}

/// V_l by integrating V' = A V + V A^T + Q, V(0) = 0.
inline Mat covariance_map_ivp(const Mat& a, const Mat& q, double l, OdeTolerance tol = {}) {
    const auto n = a.rows();
    const Mat v = integrate_dopri5([&](double, const Mat& v) -> Mat { return a * v + v * a.transpose() + q; },
                                   Mat(Mat::Zero(n, n)), 0.0, l, tol);
    return symmetrize(v);
}

/// Conditional covariance after time l of dX = AX dt + dW with Cov(dW) = Q dt.
inline Mat covariance_map(const Mat& a, const Mat& q, double l) {
    detail::require_square(a, "drift matrix");
    if (a.rows() != q.rows()) throw Error("matfun.DimensionMismatch", "A and Q sizes differ");
    if (!(l > 0.0)) throw Error("matfun.InvalidHorizon", "horizon must be positive");
    require_psd(q, "Q");
    if (detail::condition_number(kronecker_sum(a)) <= kClosedFormMaxCondition) return covariance_map_kron(a, q, l);
    return covariance_map_ivp(a, q, l);
}

struct CovarianceInverse {
    Mat q;      // Sigma Sigma^T
    Mat sigma;  // symmetric PSD square root of q
};

/// Solves covariance_map(A, Q, l) = V for Q and returns Q with its PSD square root.
inline CovarianceInverse invert_covariance_map(const Mat& a, const Mat& v, double l) {
    detail::require_square(a, "drift matrix");
    if (a.rows() != v.rows()) throw Error("matfun.DimensionMismatch", "A and V sizes differ");
    require_psd(v, "V");
    const auto n = a.rows();
    const Mat map = drift_integral(kronecker_sum(a), l);
    if (detail::condition_number(map) > 1e12) {
        throw Error("matfun.MapSingular", "covariance map is singular for this drift matrix");
    }
    Mat q = symmetrize(unvec(map.partialPivLu().solve(vec(symmetrize(v))), n));

    Eigen::SelfAdjointEigenSolver<Mat> es(q);
    Vec lambda = es.eigenvalues();
    if (n > 0 && lambda.minCoeff() < -kPsdTolerance) {
        throw Error("matfun.IndefiniteResult",
                    "recovered Q has eigenvalue " + std::to_string(lambda.minCoeff()) + " below -1e-10");
    }
    lambda = lambda.cwiseMax(0.0);
    q = symmetrize(es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose());
    return {q, psd_sqrt(q)};
}

/// Solves A V + V A^T + Q = 0.
inline Mat solve_lyapunov(const Mat& a, const Mat& q) {
    const auto n = a.rows();
    const Mat k = kronecker_sum(a);
    Eigen::FullPivLU<Mat> lu(k);
    if (!lu.isInvertible()) throw Error("matfun.SingularLyapunov", "Lyapunov operator is singular");
    return symmetrize(unvec(lu.solve(Vec(-vec(q))), n));
}

} // namespace lobfactor
