// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Each criterion also has a wall-clock budget that counts toward its verdict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace lobfactor;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    std::string failed;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failed += " [failed: " + what + "]";
        }
    }
};

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

unsigned hardware_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---- 1 ----

void cost_arithmetic(Outcome& o) {
    const auto book = fixtures::example_book();
    const Money cost = total_cost(book, 20800);
    const __int128 expected = static_cast<__int128>(20800) * 239 * Price::kScale;
    o.check(cost.units == expected, "S(20800) == 20800 x 239");
    o.check(mid_price(book) == 238.875, "mid == 238.875");
    o.detail << "S(20800) = " << cost.to_string() << ", mid = " << format_double(mid_price(book));
}

// ---- 2 ----

void eigenvalue_consistency(Outcome& o) {
    for (const auto& [name, p] : {std::pair{"TDC", fixtures::tdc()}, std::pair{"Maersk", fixtures::maersk()}}) {
        Eigen::EigenSolver<Mat> es(p.A, false);
        std::vector<std::complex<double>> got(es.eigenvalues().data(), es.eigenvalues().data() + 3);
        double worst = 0.0;
        // Match each reported eigenvalue to the nearest computed one, without reuse.
        for (Eigen::Index i = 0; i < 3; ++i) {
            auto best = std::min_element(got.begin(), got.end(), [&](auto x, auto y) {
                return std::abs(x - p.eigenvalues(i)) < std::abs(y - p.eigenvalues(i));
            });
            worst = std::max(worst, std::abs(*best - p.eigenvalues(i)));
            got.erase(best);
        }
        const double trace_gap = std::abs(p.A.trace() - p.eigenvalues.sum());
        o.check(worst <= 5e-4, std::string(name) + " eigenvalues within 5e-4");
        o.check(trace_gap <= 2e-4, std::string(name) + " trace within 2e-4");
        o.detail << name << ": max eigenvalue gap " << worst << ", trace gap " << trace_gap << "; ";
    }
}

// ---- 3 ----

void equilibrium_reproduction(Outcome& o) {
    for (const auto& [name, p] : {std::pair{"TDC", fixtures::tdc()}, std::pair{"Maersk", fixtures::maersk()}}) {
        const Vec xi = equilibrium({p.A, p.a, p.sigma});
        const double gap = (xi - p.equilibrium).cwiseAbs().maxCoeff();
        o.check(gap <= 0.02, std::string(name) + " equilibrium within 0.02");
        o.detail << name << ": -A^-1 a = (" << xi(0) << ", " << xi(1) << ", " << xi(2) << "), max gap " << gap
                 << "; ";
    }
}

// Not a criterion: whether the reported state solves A xi + a = 0 up to the
// 4-decimal rounding of A and a.
std::string rounding_consistency() {
    std::ostringstream out;
    bool all = true;
    for (const auto& [name, p] : {std::pair{"TDC", fixtures::tdc()}, std::pair{"Maersk", fixtures::maersk()}}) {
        const Vec residual = (p.A * p.equilibrium + p.a).cwiseAbs();
        const double bound = 5e-5 * (p.equilibrium.cwiseAbs().sum() + 1.0);
        all = all && residual.maxCoeff() <= bound;
        out << name << ": max |A xi + a| " << residual.maxCoeff() << " vs rounding bound " << bound << "; ";
    }
    return (all ? "consistent with rounded inputs: " : "NOT consistent with rounded inputs: ") + out.str();
}

// ---- 4, 5 ----

std::vector<double> deviation(const ResponsePath& r, int column, double level) {
    std::vector<double> d;
    for (Eigen::Index k = 0; k < r.median.rows(); ++k) d.push_back(r.median(k, column) - level);
    return d;
}

void resiliency_half_life(Outcome& o) {
    const auto p = fixtures::canonical(fixtures::tdc());
    const auto r = impulse_response(p, {1, 1.0, 24, 1.0});
    const double hl = half_life(deviation(r, 1, equilibrium(p)(1)));
    const double target = std::log(2.0) / 0.2479;
    o.check(std::abs(hl - target) <= 0.1 * target, "half-life within 10%");
    o.detail << "half-life " << hl << " steps vs " << target;
}

void crowding_out_signs(Outcome& o) {
    const auto p = fixtures::canonical(fixtures::tdc());
    const double minus = impulse_response(p, {1, 1.0, 12, 1.0}).median(1, 0);
    const double plus = impulse_response(p, {2, 1.0, 12, 1.0}).median(1, 0);
    o.check(minus < 0.0, "beta- shock gives negative drift");
    o.check(plus > 0.0, "beta+ shock gives positive drift");
    o.detail << "mid drift at step 1: beta- shock " << minus << ", beta+ shock " << plus;
}

// ---- 6 ----

void calibration_round_trip(Outcome& o) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z;
    std::vector<SdeParams> draws = {fixtures::canonical(fixtures::tdc()), fixtures::canonical(fixtures::maersk())};
    for (int i = 0; i < 100; ++i) {
        draws.push_back({oracle::random_stable(rng), fixtures::vec3(z(rng), z(rng), z(rng)),
                         psd_sqrt(oracle::random_psd(rng))});
    }
    double worst = 0.0;
    for (const auto& p : draws) {
        const SdeParams back = recover_continuous(discretize(p, 1.0), 1.0);
        worst = std::max({worst, max_abs(back.A - p.A), max_abs(back.a - p.a), max_abs(back.sigma - p.sigma)});
    }
    o.check(worst <= 1e-8, "round trip within 1e-8");
    o.detail << draws.size() << " parameter sets, max error " << worst;
}

// ---- 7 ----

SynthConfig consistency_config(std::size_t days, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.truth = fixtures::canonical(fixtures::tdc());
    cfg.days = days;
    cfg.seed = seed;
    cfg.jobs = hardware_jobs();
    cfg.profile_minus = {0.3, 0.2, 0.1, -0.1, -0.2, -0.3};
    cfg.profile_plus = {0.25, 0.15, 0.05, -0.05, -0.15, -0.25};
    return cfg;
}

// Books -> factors -> deseasonalized factors -> calibration.
Calibration pipeline(const SynthConfig& cfg) {
    const auto data = generate(cfg);
    const auto extracted = extract_series(data.snapshots, FitConfig{cfg.levels, std::nullopt, cfg.value_unit});
    const auto profile = fit_profile(extracted.observations, cfg.scheme);
    const auto flat = deseasonalize(extracted.observations, profile);
    return calibrate(state_series_from_observations(flat, cfg.interval_ns, cfg.step));
}

// |estimate - truth| for every entry of A, a and Q, in that order.
Vec entry_errors(const Calibration& cal, const SdeParams& truth) {
    Vec e(21);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) e(k++) = std::abs(cal.params.A(i, j) - truth.A(i, j));
    for (Eigen::Index i = 0; i < 3; ++i) e(k++) = std::abs(cal.params.a(i) - truth.a(i));
    const Mat q = cal.params.q(), tq = truth.q();
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) e(k++) = std::abs(q(i, j) - tq(i, j));
    return e;
}

// Least-squares slope of log y against log x.
double log_log_slope(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

void statistical_consistency(Outcome& o) {
    const std::vector<double> sizes = {1000, 10000, 100000};
    const std::size_t per_day = 36;  // transitions inside one 10:00-16:00 day
    // Mean absolute error per entry over the seeds, per sample size.
    std::vector<Vec> mean_err(sizes.size(), Vec::Zero(21));
    std::vector<double> rms(sizes.size(), 0.0);
    double worst_z = 0.0;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        const auto days = static_cast<std::size_t>(std::ceil(sizes[s] / per_day));
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const auto cfg = consistency_config(days, seed);
            const SdeParams truth = deseasonalized_truth(cfg);
            const auto cal = pipeline(cfg);
            const Vec e = entry_errors(cal, truth);
            mean_err[s] += e / 3.0;
            rms[s] += e.norm() / std::sqrt(21.0) / 3.0;
            if (s + 1 == sizes.size()) {
                Vec se(21);
                se << cal.se.A.reshaped<Eigen::RowMajor>(), cal.se.a, cal.se.Q.reshaped<Eigen::RowMajor>();
                const double z = (e.array() / se.array()).maxCoeff();
                worst_z = std::max(worst_z, z);
                o.detail << "N=" << cal.discrete.n_pairs << " seed " << seed << " max |err|/se " << z << "; ";
            }
        }
    }
    // The ln-mid column is close to a unit root and its error is noisy over
    // three seeds, so the rate is judged by the median of per-entry slopes.
    std::vector<double> slopes;
    for (Eigen::Index k = 0; k < 21; ++k) {
        std::vector<double> y;
        for (const auto& m : mean_err) y.push_back(m(k));
        slopes.push_back(log_log_slope(sizes, y));
    }
    std::nth_element(slopes.begin(), slopes.begin() + 10, slopes.end());
    const double slope = slopes[10];
    o.check(worst_z <= 3.0, "all of A, a, Q within 3 s.e. at N=1e5");
    o.check(slope >= -0.75 && slope <= -0.25, "median log-log error slope near -1/2");
    o.detail << "median per-entry slope " << slope << "; pooled rms error " << rms[0] << " / " << rms[1] << " / "
             << rms[2] << " (slope " << log_log_slope(sizes, rms) << ")";
}

// ---- 8 ----

void matrix_function_oracles(Outcome& o) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto random_matrix = [&](double norm) {
        Mat m = Mat::NullaryExpr(3, 3, [&] { return u(rng); });
        return Mat(m * (norm / m.operatorNorm()));
    };
    double e_expm = 0, e_logm = 0, e_drift = 0, e_cov = 0;
    for (int i = 0; i < 200; ++i) {
        const Mat m = random_matrix(1.0);
        e_expm = std::max(e_expm, max_abs(expm(m) - oracle::expm_taylor(m, 30)));
        const Mat l = random_matrix(3.0);
        e_logm = std::max(e_logm, max_abs(logm(expm(l)) - l));
    }
    for (int i = 0; i < 100; ++i) {
        const Mat a = oracle::random_stable(rng);
        const Mat q = oracle::random_psd(rng);
        e_drift = std::max(e_drift, max_abs(drift_integral_closed_form(a, 1.0) - drift_integral_ivp(a, 1.0)));
        e_cov = std::max(e_cov, max_abs(covariance_map_kron(a, q, 1.0) - covariance_map_ivp(a, q, 1.0)));
    }
    Mat a(1, 1), q(1, 1);
    a << -1.0;
    q << 4.0;
    const double ou = covariance_map(a, q, 1.0)(0, 0);
    const double e_ou = std::abs(ou - 2.0 * (1.0 - std::exp(-2.0)));
    o.check(e_expm <= 1e-12, "expm vs series");
    o.check(e_logm <= 1e-9, "logm(expm(M)) == M");
    o.check(e_drift <= 1e-10, "drift_integral closed form vs IVP");
    o.check(e_cov <= 1e-10, "covariance_map Kronecker vs IVP");
    o.check(e_ou <= 1e-12 && std::abs(ou - 1.729329) <= 5e-7, "scalar OU variance");
    o.detail << "expm " << e_expm << ", logm " << e_logm << ", drift " << e_drift << ", cov " << e_cov
             << ", OU " << format_double(ou);
}

// ---- 9 ----

void convexity_invariants(Outcome& o) {
    std::mt19937_64 rng(9);
    double worst_phi = 0.0;
    bool convex = true, monotone = true, dominates = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto b = fixtures::random_book(rng);
        const auto r = impact_curve(b);
        const double mid = mid_price(b);
        const Quantity lo = -b.depth(Side::Bid), hi = b.depth(Side::Ask);
        std::vector<Quantity> xs;
        for (int k = 0; k <= 60; ++k) xs.push_back(lo + (hi - lo) * k / 60);
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        for (std::size_t i = 0; i + 2 < xs.size(); ++i) {
            const double s0 = total_cost(b, xs[i]).to_double(), s1 = total_cost(b, xs[i + 1]).to_double(),
                         s2 = total_cost(b, xs[i + 2]).to_double();
            const double left = (s1 - s0) / static_cast<double>(xs[i + 1] - xs[i]);
            const double right = (s2 - s1) / static_cast<double>(xs[i + 2] - xs[i + 1]);
            convex = convex && left <= right * (1 + 1e-12);
        }
        double prev = -INFINITY;
        for (int k = -200; k <= 200; ++k) {
            const double h = (k < 0 ? r.bid_depth() : r.ask_depth()) * (k / 200.0);
            const double v = r(h);
            monotone = monotone && v >= prev;
            prev = v;
            dominates = dominates && r.phi(h) >= h * (1 - 1e-12) - 1e-9;
        }
        for (Quantity x : xs) {
            const double cost = total_cost(b, x).to_double();
            if (cost != 0.0) worst_phi = std::max(worst_phi, std::abs(r.phi(mid * static_cast<double>(x)) - cost) / std::abs(cost));
        }
    }
    o.check(convex, "S convex");
    o.check(monotone, "r nondecreasing");
    o.check(dominates, "phi(h) >= h");
    o.check(worst_phi <= 1e-9, "S(x) == phi(mid x) within 1e-9 relative");
    o.detail << "1000 books, max relative phi error " << worst_phi;
}

// ---- 10 ----

SynthConfig seasonal_config(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.truth = fixtures::canonical(fixtures::tdc());
    cfg.days = 20;
    cfg.seed = seed;
    cfg.jobs = hardware_jobs();
    cfg.profile_minus = {0.5, 0.3, 0.1, -0.1, -0.3, -0.5};
    cfg.profile_plus = {0.5, 0.3, 0.1, -0.1, -0.3, -0.5};
    return cfg;
}

double mean_log(std::span<const ImpactObservation> obs, bool plus) {
    double s = 0.0;
    for (const auto& x : obs) s += std::log(plus ? x.beta_plus : x.beta_minus);
    return s / static_cast<double>(obs.size());
}

void seasonality(Outcome& o) {
    const FitConfig fit{10, std::nullopt, 1e6};
    double flat = 0.0, mean_gap = 0.0;
    int monotone = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto cfg = seasonal_config(seed);
        const auto obs = extract_series(generate(cfg).snapshots, fit).observations;
        const auto p = fit_profile(obs, cfg.scheme);
        if (seed == 1) {
            const auto d = deseasonalize(obs, p);
            const auto q = fit_profile(d, cfg.scheme);
            for (std::size_t b = 0; b < q.beta_minus.size(); ++b) {
                flat = std::max({flat, std::abs(q.beta_minus[b] - q.beta_minus[0]),
                                 std::abs(q.beta_plus[b] - q.beta_plus[0])});
            }
            mean_gap = std::max(std::abs(mean_log(d, false) - mean_log(obs, false)),
                                std::abs(mean_log(d, true) - mean_log(obs, true)));
        }
        bool decreasing = true;
        for (std::size_t b = 1; b < p.beta_minus.size(); ++b) {
            decreasing = decreasing && p.beta_minus[b] < p.beta_minus[b - 1] && p.beta_plus[b] < p.beta_plus[b - 1];
        }
        monotone += decreasing;
    }
    o.check(flat <= 1e-10, "refitted profile flat");
    o.check(mean_gap <= 1e-12, "grand mean preserved");
    o.check(monotone >= 95, "monotone in >= 95 of 100 seeds");
    o.detail << "refit spread " << flat << ", grand mean shift " << mean_gap << ", monotone " << monotone << "/100";
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<void(Outcome&)> run;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "cost arithmetic on the example book", 1, cost_arithmetic},
        {2, "eigenvalue and trace consistency of the reference drifts", 1, eigenvalue_consistency},
        {3, "equilibrium reproduction from rounded inputs", 1, equilibrium_reproduction},
        {4, "resiliency half-life of ln beta-", 1, resiliency_half_life},
        {5, "crowding-out sign pattern", 1, crowding_out_signs},
        {6, "exact calibration round trip", 10, calibration_round_trip},
        {7, "end-to-end statistical consistency", 300, statistical_consistency},
        {8, "matrix-function oracles", 10, matrix_function_oracles},
        {9, "convexity and liquidity invariants", 30, convexity_invariants},
        {10, "seasonality removal and recovery", 60, seasonality},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_seconds) o.check(false, "over the time budget");
        failures += !o.pass;
        std::printf("%s %2d %s (%.2f s / %.0f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    c.budget_seconds, (o.detail.str() + o.failed).c_str());
        if (c.id == 3) std::printf("INFO  3 %s\n", rounding_consistency().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
