#pragma once

// Intraday pattern removal for ln beta- and ln beta+ via a regression on
// time-of-day bucket dummies (no intercept, so each coefficient is the bucket
// mean), plus within-day sample autocovariances.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lobfactor/impact_fit.hpp"
#include "lobfactor/time.hpp"

namespace lobfactor {

/// Contiguous buckets of `width_ns` covering the trading window. The last
/// bucket is closed on the right so that a sample at the window end belongs to it.
struct BucketScheme {
    TradingWindow window;
    std::int64_t width_ns = 3600 * kNanosPerSecond;

    std::size_t count() const {
        if (width_ns <= 0) throw Error("seasonal.InvalidBuckets", "bucket width must be positive");
        const auto span = window.end_ns - window.start_ns;
        return static_cast<std::size_t>((span + width_ns - 1) / width_ns);
    }

    std::pair<std::int64_t, std::int64_t> bounds(std::size_t i) const {
        const auto lo = window.start_ns + static_cast<std::int64_t>(i) * width_ns;
        return {lo, std::min(lo + width_ns, window.end_ns)};
    }

    /// Bucket of a timestamp; throws UncoveredHour outside the window.
    std::size_t bucket_of(Timestamp ts) const {
        const auto tod = time_of_day_ns(ts);
        if (tod < window.start_ns || tod > window.end_ns) {
            throw Error("seasonal.UncoveredHour", "observation at " + format_iso8601(ts) + " is outside window " +
                                                      window.to_string());
        }
        const auto n = count();
        const auto b = static_cast<std::size_t>((tod - window.start_ns) / width_ns);
        return b < n ? b : n - 1;
    }
};

struct SeasonalProfile {
    BucketScheme scheme;
    std::vector<double> beta_minus;  // bucket means of ln beta-
    std::vector<double> beta_plus;   // bucket means of ln beta+
    std::vector<std::size_t> counts;
    /// Mean of each ln beta series, i.e. the count-weighted mean of the coefficients.
    double grand_mean_minus = 0.0;
    double grand_mean_plus = 0.0;
};

inline SeasonalProfile fit_profile(std::span<const ImpactObservation> obs, const BucketScheme& scheme) {
    const std::size_t n = scheme.count();
    SeasonalProfile p;
    p.scheme = scheme;
    p.beta_minus.assign(n, 0.0);
    p.beta_plus.assign(n, 0.0);
    p.counts.assign(n, 0);
    double total_minus = 0.0;
    double total_plus = 0.0;
    for (const auto& o : obs) {
        const auto b = scheme.bucket_of(o.ts);
        const double lm = std::log(o.beta_minus);
        const double lp = std::log(o.beta_plus);
        if (!std::isfinite(lm) || !std::isfinite(lp)) {
            throw Error("seasonal.NonPositiveBeta", "observation at " + format_iso8601(o.ts) + " has beta <= 0");
        }
        p.beta_minus[b] += lm;
        p.beta_plus[b] += lp;
        total_minus += lm;
        total_plus += lp;
        ++p.counts[b];
    }
    for (std::size_t b = 0; b < n; ++b) {
        if (p.counts[b] < 2) {
            const auto [lo, hi] = scheme.bounds(b);
            throw Error("seasonal.SparseBucket",
                        "bucket starting " + std::to_string(lo / kNanosPerSecond / 3600) + ":" +
                            (lo / kNanosPerSecond / 60 % 60 < 10 ? "0" : "") +
                            std::to_string(lo / kNanosPerSecond / 60 % 60) + " has " + std::to_string(p.counts[b]) +
                            " observations, need at least 2");
        }
        p.beta_minus[b] /= static_cast<double>(p.counts[b]);
        p.beta_plus[b] /= static_cast<double>(p.counts[b]);
    }
    p.grand_mean_minus = total_minus / static_cast<double>(obs.size());
    p.grand_mean_plus = total_plus / static_cast<double>(obs.size());
    return p;
}

/// ln beta -> ln beta - coefficient(bucket) + grand mean, for beta- and beta+.
/// Mid-price and the one-sided beta are left untouched.
inline std::vector<ImpactObservation> deseasonalize(std::span<const ImpactObservation> obs,
                                                    const SeasonalProfile& profile) {
    std::vector<ImpactObservation> out(obs.begin(), obs.end());
    for (auto& o : out) {
        const auto b = profile.scheme.bucket_of(o.ts);
        if (b >= profile.beta_minus.size()) {
            throw Error("seasonal.UncoveredHour", "profile has no coefficient for " + format_iso8601(o.ts));
        }
        o.beta_minus = std::exp(std::log(o.beta_minus) - profile.beta_minus[b] + profile.grand_mean_minus);
        o.beta_plus = std::exp(std::log(o.beta_plus) - profile.beta_plus[b] + profile.grand_mean_plus);
    }
    return out;
}

struct TimedValue {
    Timestamp ts = 0;
    double value = 0.0;
};

/// Biased sample autocovariance for lags 0..max_lag, pairing only samples that
/// fall on the same day: gamma(k) = (1/n) sum (x_t - mean)(x_{t+k} - mean).
inline std::vector<double> autocovariance(std::span<const TimedValue> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (n <= max_lag) {
        throw Error("seasonal.SeriesTooShort", "series of length " + std::to_string(n) +
                                                    " is too short for lag " + std::to_string(max_lag));
    }
    double mean = 0.0;
    for (const auto& s : series) mean += s.value;
    mean /= static_cast<double>(n);

    std::vector<double> gamma(max_lag + 1, 0.0);
    std::size_t day_start = 0;
    while (day_start < n) {
        std::size_t day_end = day_start + 1;
        const auto day = day_index(series[day_start].ts);
        while (day_end < n && day_index(series[day_end].ts) == day) ++day_end;
        for (std::size_t k = 0; k <= max_lag; ++k) {
            for (std::size_t t = day_start; t + k < day_end; ++t) {
                gamma[k] += (series[t].value - mean) * (series[t + k].value - mean);
            }
        }
        day_start = day_end;
    }
    for (auto& g : gamma) g /= static_cast<double>(n);
    return gamma;
}

/// ln beta- or ln beta+ as a timed series.
inline std::vector<TimedValue> log_beta_series(std::span<const ImpactObservation> obs, Side side) {
    std::vector<TimedValue> out;
    out.reserve(obs.size());
    for (const auto& o : obs) out.push_back({o.ts, std::log(side == Side::Bid ? o.beta_minus : o.beta_plus)});
    return out;
}

} // namespace lobfactor
