#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace lobfactor;
using fixtures::error_code;

namespace {

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

std::vector<double> deviation(const ResponsePath& r, int column, double level) {
    std::vector<double> out;
    for (Eigen::Index k = 0; k < r.median.rows(); ++k) out.push_back(r.median(k, column) - level);
    return out;
}

} // namespace

TEST(Equilibrium, ReferenceParameterSets) {
    // -A^{-1} a of the 4-decimal printed inputs. The slow mid eigenvalue amplifies
    // input rounding, so the reported equilibria are checked by their residual instead.
    const auto tdc = fixtures::tdc();
    const Vec xi = equilibrium({tdc.A, tdc.a, tdc.sigma});
    EXPECT_NEAR(xi(0), 5.6131, 1e-4);
    EXPECT_NEAR(xi(1), -0.2224, 1e-4);
    EXPECT_NEAR(xi(2), -0.5208, 1e-4);
    const auto mm = fixtures::maersk();
    const Vec xm = equilibrium({mm.A, mm.a, mm.sigma});
    EXPECT_NEAR(xm(0), 10.8901, 1e-4);
    EXPECT_NEAR(xm(1), 0.0868, 1e-4);
    EXPECT_NEAR(xm(2), -0.1330, 1e-4);

    // The reported states solve A xi + a = 0 up to the rounding of A and a (half a unit in the 4th decimal).
    for (const auto& p : {tdc, mm}) {
        const Vec residual = p.A * p.equilibrium + p.a;
        const double bound = 5e-5 * (p.equilibrium.cwiseAbs().sum() + 1.0);
        EXPECT_LE(residual.cwiseAbs().maxCoeff(), bound);
    }
}

TEST(Equilibrium, Examples) {
    const Vec v = fixtures::vec3(1.5, -2.0, 0.25);
    EXPECT_LE((equilibrium({-Mat::Identity(3, 3), v, Mat::Zero(3, 3)}) - v).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(error_code([] { equilibrium({Mat::Zero(3, 3), Vec::Ones(3), Mat::Zero(3, 3)}); }), "dynamics.SingularA");
}

TEST(Equilibrium, IsFixedPointOfOneStepMap) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 50; ++trial) {
        const SdeParams p{oracle::random_stable(rng), fixtures::vec3(z(rng), z(rng), z(rng)), Mat::Zero(3, 3)};
        const Vec xi = equilibrium(p);
        const auto dp = discretize(p, 1.0);
        ASSERT_LE((dp.B * xi + dp.b - xi).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, xi.cwiseAbs().maxCoeff()));
    }
}

TEST(StationaryCovariance, Examples) {
    SdeParams s{Mat::Constant(1, 1, -1.0), Vec::Zero(1), Mat::Constant(1, 1, std::sqrt(2.0))};
    EXPECT_NEAR(stationary_covariance(s)(0, 0), 1.0, 1e-14);
    SdeParams m{-Mat::Identity(3, 3), Vec::Zero(3), Mat(std::sqrt(2.0) * Mat::Identity(3, 3))};
    EXPECT_LE(max_abs(stationary_covariance(m) - Mat::Identity(3, 3)), 1e-14);
    SdeParams unstable = m;
    unstable.A(2, 2) = 0.1;
    EXPECT_EQ(error_code([&] { stationary_covariance(unstable); }), "dynamics.NotStable");
    EXPECT_EQ(error_code([&] { model_autocovariance(unstable, 3, 1.0); }), "dynamics.NotStable");

    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const SdeParams p{oracle::random_stable(rng, 3, -1.0, -0.2), Vec::Zero(3), psd_sqrt(oracle::random_psd(rng))};
        const Mat v_inf = stationary_covariance(p);
        ASSERT_LE(max_abs(covariance_map(p.A, p.q(), 500.0) - v_inf), 1e-8 * std::max(1.0, max_abs(v_inf)));
    }
}

TEST(Simulate, NoiselessPathFollowsMeanOde) {
    const auto tdc = fixtures::canonical(fixtures::tdc());
    const SdeParams p{tdc.A, tdc.a, Mat::Zero(3, 3)};
    const Vec xi0 = fixtures::vec3(5.0, -1.0, 0.5);
    const auto paths = simulate(p, xi0, {50, 1.0, 2, 9, 1});
    for (std::size_t k = 0; k <= 50; ++k) {
        // Mean solution exp(tA) xi0 + int_0^t exp(sA) ds a.
        const double t = static_cast<double>(k);
        const Vec mean = k == 0 ? xi0 : Vec(expm(t * p.A) * xi0 + drift_integral(p.A, t) * p.a);
        ASSERT_LE((paths.state(0, k) - mean).cwiseAbs().maxCoeff(), 1e-10) << k;
        ASSERT_EQ(paths.state(1, k), paths.state(0, k));
    }
}

TEST(Simulate, EnsembleMomentsMatchGaussianTransition) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    const SdeParams p{oracle::random_stable(rng), fixtures::vec3(z(rng), z(rng), z(rng)),
                      psd_sqrt(oracle::random_psd(rng))};
    const Vec xi0 = fixtures::vec3(1.0, -1.0, 0.5);
    const std::size_t n = 100000, steps = 4;
    const double l = 0.5, horizon = l * steps;
    const auto paths = simulate(p, xi0, {steps, l, n, 77, 1});
    Vec mean = Vec::Zero(3);
    for (std::size_t i = 0; i < n; ++i) mean += paths.state(i, steps);
    mean /= static_cast<double>(n);
    Mat cov = Mat::Zero(3, 3);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec d = paths.state(i, steps) - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(n - 1);
    const Vec true_mean = expm(horizon * p.A) * xi0 + drift_integral(p.A, horizon) * p.a;
    const Mat true_cov = covariance_map(p.A, p.q(), horizon);
    const double dev = 4.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(mean(i), true_mean(i), dev * std::sqrt(true_cov(i, i))) << i;
        for (int j = 0; j < 3; ++j) {
            const double sd = std::sqrt(true_cov(i, i) * true_cov(j, j) + true_cov(i, j) * true_cov(i, j));
            EXPECT_NEAR(cov(i, j), true_cov(i, j), dev * sd) << i << "," << j;
        }
    }
}

TEST(Simulate, DeterministicAcrossRunsAndThreadCounts) {
    const auto p = fixtures::canonical(fixtures::tdc());
    const Vec xi0 = equilibrium(p);
    const auto a = simulate(p, xi0, {20, 1.0, 64, 5, 1});
    const auto b = simulate(p, xi0, {20, 1.0, 64, 5, 1});
    const auto c = simulate(p, xi0, {20, 1.0, 64, 5, 4});
    EXPECT_TRUE(std::equal(a.raw().begin(), a.raw().end(), b.raw().begin()));
    EXPECT_TRUE(std::equal(a.raw().begin(), a.raw().end(), c.raw().begin()));
    const auto d = simulate(p, xi0, {20, 1.0, 64, 6, 1});
    EXPECT_FALSE(std::equal(a.raw().begin(), a.raw().end(), d.raw().begin()));
    EXPECT_EQ(error_code([&] { simulate(p, xi0, {0, 1.0, 1, 0, 1}); }), "dynamics.InvalidSpec");
    EXPECT_EQ(error_code([&] { simulate(p, xi0, {1, 0.0, 1, 0, 1}); }), "dynamics.InvalidSpec");
    EXPECT_EQ(error_code([&] { simulate(p, Vec::Zero(2), {1, 1.0, 1, 0, 1}); }), "dynamics.InvalidSpec");
}

TEST(ImpulseResponse, ZeroShockStaysAtEquilibrium) {
    const auto p = fixtures::canonical(fixtures::tdc());
    const Vec eq = equilibrium(p);
    const auto r = impulse_response(p, {1, 0.0, 12, 1.0});
    for (Eigen::Index k = 0; k <= 12; ++k) {
        EXPECT_NEAR(r.median(k, 0), 0.0, 1e-12);
        EXPECT_NEAR(r.median(k, 1), eq(1), 1e-12);
        EXPECT_NEAR(r.median(k, 2), eq(2), 1e-12);
    }
}

TEST(ImpulseResponse, TdcHalfLifeOfBetaMinus) {
    const auto p = fixtures::canonical(fixtures::tdc());
    const Vec eq = equilibrium(p);
    const auto r = impulse_response(p, {1, 1.0, 24, 1.0});
    const double hl = half_life(deviation(r, 1, eq(1)));
    const double target = std::log(2.0) / 0.2479;
    EXPECT_NEAR(target, 2.80, 0.005);
    EXPECT_NEAR(hl, target, 0.1 * target);
}

TEST(ImpulseResponse, TdcDriftSigns) {
    const auto p = fixtures::canonical(fixtures::tdc());
    EXPECT_LT(impulse_response(p, {1, 1.0, 12, 1.0}).median(1, 0), 0.0);
    EXPECT_GT(impulse_response(p, {2, 1.0, 12, 1.0}).median(1, 0), 0.0);
}

TEST(ImpulseResponse, BandsAreSymmetricAndOrdered) {
    const auto p = fixtures::canonical(fixtures::maersk());
    for (const Eigen::Index shocked : {1, 2}) {
        const auto r = impulse_response(p, {shocked, 2.0, 12, 1.0});
        EXPECT_EQ(r.median.rows(), 13);
        for (Eigen::Index k = 0; k <= 12; ++k) {
            for (int v = 0; v < 3; ++v) {
                EXPECT_LE(r.lo95(k, v), r.median(k, v));
                EXPECT_LE(r.median(k, v), r.hi95(k, v));
                EXPECT_NEAR(r.hi95(k, v) - r.median(k, v), r.median(k, v) - r.lo95(k, v),
                            1e-13 * (1.0 + std::abs(r.median(k, v))));
            }
        }
        // No uncertainty at the shocked start.
        EXPECT_EQ(r.lo95(0, 1), r.hi95(0, 1));
    }
}

TEST(ImpulseResponse, MediansConvergeGeometrically) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 20; ++trial) {
        const SdeParams p{oracle::random_stable(rng), fixtures::vec3(z(rng), z(rng), z(rng)),
                          psd_sqrt(oracle::random_psd(rng))};
        const Vec eq = equilibrium(p);
        const auto r = impulse_response(p, {1, 1.0, 60, 1.0});
        Eigen::EigenSolver<Mat> es(p.A, false);
        const double rho = std::exp(es.eigenvalues().real().maxCoeff());
        // Constant absorbs the transient of a non-normal B.
        const Mat B = expm(p.A);
        Mat bk = Mat::Identity(3, 3);
        double c = 0.0;
        for (int k = 0; k <= 60; ++k, bk = B * bk) c = std::max(c, bk.operatorNorm() / std::pow(rho, k));
        // Only the shocked coordinate deviates at step 0, so |xi_k - eq| <= |B^k| d0.
        const double d0 = (r.median.row(0).tail(2).transpose() - eq.tail(2)).norm();
        for (Eigen::Index k = 0; k <= 60; ++k) {
            const double d = (r.median.row(k).tail(2).transpose() - eq.tail(2)).norm();
            ASSERT_LE(d, c * std::pow(rho, static_cast<double>(k)) * d0 * (1 + 1e-9) + 1e-12) << trial << " " << k;
        }
    }
}

TEST(ImpulseResponse, MonteCarloAgreesWithAnalytic) {
    const auto p = fixtures::canonical(fixtures::tdc());
    const ImpulseSpec spec{2, 1.0, 8, 1.0};
    const auto a = impulse_response(p, spec);
    const std::size_t n = 40000;
    const auto m = impulse_response_mc(p, spec, n, 99);
    for (Eigen::Index k = 1; k <= 8; ++k) {
        for (int v = 0; v < 3; ++v) {
            const double sd = (a.hi95(k, v) - a.median(k, v)) / kZ975;
            // Median and 2.5% quantile standard errors of a normal sample.
            EXPECT_NEAR(m.median(k, v), a.median(k, v), 4 * 1.2533 * sd / std::sqrt(static_cast<double>(n)));
            EXPECT_NEAR(m.lo95(k, v), a.lo95(k, v), 4 * 2.7 * sd / std::sqrt(static_cast<double>(n)));
            EXPECT_NEAR(m.hi95(k, v), a.hi95(k, v), 4 * 2.7 * sd / std::sqrt(static_cast<double>(n)));
        }
    }
}

TEST(ImpulseResponse, Errors) {
    const auto p = fixtures::canonical(fixtures::tdc());
    EXPECT_EQ(error_code([&] { impulse_response(p, {0, 1.0, 12, 1.0}); }), "dynamics.InvalidSpec");
    EXPECT_EQ(error_code([&] { impulse_response(p, {1, -1.0, 12, 1.0}); }), "dynamics.InvalidSpec");
    EXPECT_EQ(error_code([&] { impulse_response(p, {1, 1.0, 0, 1.0}); }), "dynamics.InvalidSpec");
    SdeParams unstable = p;
    unstable.A(0, 0) = 0.01;
    EXPECT_EQ(error_code([&] { impulse_response(unstable, {1, 1.0, 12, 1.0}); }), "dynamics.NotStable");
}

TEST(HalfLife, Examples) {
    const std::vector<double> geometric = {8, 4, 2, 1};
    EXPECT_DOUBLE_EQ(half_life(geometric), 1.0);
    const std::vector<double> linear = {1.0, 0.75, 0.25};
    EXPECT_DOUBLE_EQ(half_life(linear), 1.5);
    const std::vector<double> flat = {1.0, 0.9};
    EXPECT_TRUE(std::isinf(half_life(flat)));
    EXPECT_EQ(half_life(std::vector<double>{0.0, 1.0}), 0.0);
}

TEST(ModelAutocovariance, Examples) {
    const SdeParams s{Mat::Constant(1, 1, -0.5), Vec::Zero(1), Mat::Constant(1, 1, 0.8)};
    const auto g = model_autocovariance(s, 5, 2.0);
    ASSERT_EQ(g.size(), 6u);
    for (std::size_t k = 0; k <= 5; ++k) {
        EXPECT_NEAR(g[k](0, 0), 0.64 / (2 * 0.5) * std::exp(-0.5 * 2.0 * static_cast<double>(k)), 1e-14);
    }
    const auto p = fixtures::canonical(fixtures::maersk());
    EXPECT_EQ(model_autocovariance(p, 0, 1.0)[0], stationary_covariance(p));
}

TEST(ModelAutocovariance, MatchesLongSimulation) {
    SdeParams p{Mat::Zero(2, 2), Vec::Zero(2), Mat::Zero(2, 2)};
    p.A << -0.3, 0.1, 0.05, -0.5;
    p.a << 0.2, -0.1;
    p.sigma << 0.4, 0.1, 0.1, 0.3;
    const std::size_t n = 200000;
    const auto paths = simulate(p, equilibrium(p), {n, 1.0, 1, 123, 1});
    std::vector<TimedValue> x0, x1;
    for (std::size_t k = 0; k <= n; ++k) {
        x0.push_back({0, paths.state(0, k)(0)});
        x1.push_back({0, paths.state(0, k)(1)});
    }
    const auto model = model_autocovariance(p, 6, 1.0);
    const auto s0 = autocovariance(x0, 6);
    const auto s1 = autocovariance(x1, 6);
    for (std::size_t k = 0; k <= 6; ++k) {
        EXPECT_NEAR(s0[k], model[k](0, 0), 0.05 * model[0](0, 0)) << k;
        EXPECT_NEAR(s1[k], model[k](1, 1), 0.05 * model[0](1, 1)) << k;
    }
}
