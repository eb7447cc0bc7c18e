#pragma once

// Liquidity factors as least-squares slopes of the impact curve through the origin:
//   beta   = argmin over [h-, h+] of |r(h) - beta h|^2
//   beta+  = same over [0, h+],   beta- = same over [h-, 0].
// The normal equation gives beta = int h r(h) dh / int h^2 dh, and both integrals
// are evaluated exactly on the step representation of r.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lobfactor/lob_core.hpp"

namespace lobfactor {

struct Cutoffs {
    double h_minus = 0.0;  // < 0
    double h_plus = 0.0;   // > 0
};

struct FitConfig {
    /// Number of best distinct price levels per side inside the window.
    int depth_levels = 10;
    /// Explicit window; overrides depth_levels. Clamped to the available depth.
    std::optional<Cutoffs> cutoffs;
    /// Currency per unit of h in which betas are reported (1e6 reports per million).
    double value_unit = 1.0;
};

struct BetaFit {
    double beta = 0.0;
    double beta_minus = 0.0;
    double beta_plus = 0.0;
};

/// Floor applied to nonpositive betas so that ln(beta) stays finite.
inline constexpr double kBetaFloor = 1e-12;

namespace detail {

inline Cutoffs cutoffs_from_steps(const ImpactCurve& curve, int depth_levels) {
    if (depth_levels < 1) {
        throw Error("impact_fit.InvalidDepth", "depth_levels must be at least 1, got " + std::to_string(depth_levels));
    }
    const auto bids = curve.bid_steps();
    const auto asks = curve.ask_steps();
    if (bids.empty() || asks.empty()) throw Error("lob_core.EmptySide", "both book sides need at least one level");
    const auto nb = std::min<std::size_t>(static_cast<std::size_t>(depth_levels), bids.size());
    const auto na = std::min<std::size_t>(static_cast<std::size_t>(depth_levels), asks.size());
    return {-bids[nb - 1].extent, asks[na - 1].extent};
}

} // namespace detail

/// h+ = mid x shares in the best `depth_levels` ask levels, h- likewise on the
/// bid side (negative). Shallower books use all their levels.
inline Cutoffs cutoffs_from_levels(const OrderBook& book, int depth_levels) {
    if (depth_levels < 1) {
        throw Error("impact_fit.InvalidDepth", "depth_levels must be at least 1, got " + std::to_string(depth_levels));
    }
    const double mid = mid_price(book);
    auto cum = [&](std::span<const PriceLevel> levels) {
        Quantity q = 0;
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(depth_levels), levels.size());
        for (std::size_t i = 0; i < n; ++i) q += levels[i].quantity;
        return mid * static_cast<double>(q);
    };
    return {-cum(book.bids()), cum(book.asks())};
}

/// Raw least-squares slopes, in 1/currency, over an explicit window.
inline BetaFit fit_beta(const ImpactCurve& curve, Cutoffs window) {
    if (curve.bid_steps().empty() || curve.ask_steps().empty()) {
        throw Error("impact_fit.EmptyWindow", "impact curve needs at least one level per side");
    }
    if (!(window.h_minus < 0.0) || !(window.h_plus > 0.0)) {
        throw Error("impact_fit.DegenerateWindow", "cutoffs must satisfy h- < 0 < h+");
    }
    const double hm = std::max(window.h_minus, -curve.bid_depth());
    const double hp = std::min(window.h_plus, curve.ask_depth());

    const double m_plus = curve.first_moment(0.0, hp);
    const double m_minus = curve.first_moment(hm, 0.0);
    const double q_plus = hp * hp * hp / 3.0;
    const double q_minus = -hm * hm * hm / 3.0;

    BetaFit fit;
    fit.beta_plus = m_plus / q_plus;
    fit.beta_minus = m_minus / q_minus;
    fit.beta = (m_plus + m_minus) / (q_plus + q_minus);
    return fit;
}

/// Slopes in 1/value_unit with the window chosen by `config`.
inline BetaFit fit_beta(const ImpactCurve& curve, const FitConfig& config) {
    const Cutoffs window = config.cutoffs ? *config.cutoffs : detail::cutoffs_from_steps(curve, config.depth_levels);
    BetaFit fit = fit_beta(curve, window);
    fit.beta *= config.value_unit;
    fit.beta_minus *= config.value_unit;
    fit.beta_plus *= config.value_unit;
    return fit;
}

struct ImpactObservation {
    Timestamp ts = 0;
    double mid = 0.0;
    double beta_minus = 0.0;
    double beta_plus = 0.0;
    double beta = 0.0;
    bool floored = false;  // some beta was <= 0 and was raised to kBetaFloor

    friend bool operator==(const ImpactObservation&, const ImpactObservation&) = default;
};

struct SkippedSnapshot {
    Timestamp ts = 0;
    std::string code;
    std::string reason;
};

struct ExtractResult {
    std::vector<ImpactObservation> observations;
    std::vector<SkippedSnapshot> skipped;
};

inline ImpactObservation observe(const OrderBook& book, const FitConfig& config) {
    const ImpactCurve curve = impact_curve(book);
    const BetaFit fit = fit_beta(curve, config);
    ImpactObservation obs{book.timestamp(), curve.mid(), fit.beta_minus, fit.beta_plus, fit.beta, false};
    for (double* b : {&obs.beta_minus, &obs.beta_plus, &obs.beta}) {
        if (!(*b > 0.0)) {
            *b = kBetaFloor;
            obs.floored = true;
        }
    }
    return obs;
}

/// One observation per usable snapshot; failures are recorded, not thrown.
inline ExtractResult extract_series(std::span<const OrderBook> snapshots, const FitConfig& config) {
    ExtractResult result;
    result.observations.reserve(snapshots.size());
    for (const auto& book : snapshots) {
        try {
            result.observations.push_back(observe(book, config));
        } catch (const Error& e) {
            result.skipped.push_back({book.timestamp(), e.code(), e.what()});
        }
    }
    return result;
}

} // namespace lobfactor
