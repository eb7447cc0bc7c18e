#pragma once

// Synthetic books and order flow generated from a known linear SDE for the
// state xi = (ln mid, ln beta-, ln beta+), used as ground truth for the
// fit -> deseasonalize -> calibrate pipeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lobfactor/book_builder.hpp"
#include "lobfactor/dynamics.hpp"
#include "lobfactor/impact_fit.hpp"
#include "lobfactor/seasonal.hpp"

namespace lobfactor {

struct SynthConfig {
    SdeParams truth;
    double step = 1.0;  // model time per sampling interval
    BucketScheme scheme;
    /// Additive offsets on ln beta- / ln beta+ per bucket of `scheme`; empty means none.
    std::vector<double> profile_minus;
    std::vector<double> profile_plus;
    Price tick = Price::parse("0.0001");
    int levels = 10;
    /// Currency value resting at each level; quantities are round(notional / mid).
    double level_notional = 1e4;
    /// Currency per unit of h in which the betas of xi are expressed.
    double value_unit = 1e6;
    std::uint64_t seed = 0;
    std::size_t days = 1;
    std::int64_t first_day = 20458;  // 2026-01-05, as days since the epoch
    std::int64_t interval_ns = 600 * kNanosPerSecond;
    std::optional<Vec> initial;  // defaults to the equilibrium
    unsigned jobs = 1;

    void validate() const {
        auto fail = [](const std::string& m) { throw Error("synth.InvalidConfig", m); };
        if (truth.dim() != 3 || truth.A.cols() != 3 || truth.a.size() != 3 || truth.sigma.rows() != 3 ||
            truth.sigma.cols() != 3) {
            fail("truth must be a three-factor model");
        }
        if (!(step > 0.0)) fail("step must be positive");
        if (tick.units() <= 0) fail("tick size must be positive");
        if (levels < 1) fail("levels must be at least 1");
        if (!(level_notional > 0.0) || !(value_unit > 0.0)) fail("level_notional and value_unit must be positive");
        if (interval_ns <= 0) fail("interval must be positive");
        if (days < 1) fail("days must be at least 1");
        const auto nb = scheme.count();
        if ((!profile_minus.empty() && profile_minus.size() != nb) ||
            (!profile_plus.empty() && profile_plus.size() != nb)) {
            fail("profile must have one offset per bucket (" + std::to_string(nb) + ")");
        }
        if (initial && initial->size() != 3) fail("initial state must have three components");
    }

    /// Sampling grid offsets within a day: window start + k * interval up to the window end.
    std::vector<std::int64_t> grid() const {
        std::vector<std::int64_t> out;
        for (auto t = scheme.window.start_ns; t <= scheme.window.end_ns; t += interval_ns) out.push_back(t);
        return out;
    }

    double offset_minus(std::size_t bucket) const { return profile_minus.empty() ? 0.0 : profile_minus[bucket]; }
    double offset_plus(std::size_t bucket) const { return profile_plus.empty() ? 0.0 : profile_plus[bucket]; }
};

/// Sample-weighted mean profile offset (0, mean-, mean+). Deseasonalized states
/// equal xi shifted by this vector, so the pipeline recovers truth with
/// a replaced by a - A * shift.
inline Vec profile_mean_shift(const SynthConfig& cfg) {
    Vec shift = Vec::Zero(3);
    const auto g = cfg.grid();
    for (auto t : g) {
        const auto b = cfg.scheme.bucket_of(t);
        shift(1) += cfg.offset_minus(b);
        shift(2) += cfg.offset_plus(b);
    }
    return shift / static_cast<double>(g.size());
}

inline SdeParams deseasonalized_truth(const SynthConfig& cfg) {
    SdeParams p = cfg.truth;
    p.a = cfg.truth.a - cfg.truth.A * profile_mean_shift(cfg);
    return p;
}

/// Book whose impact curve has least-squares slopes exp(xi_2), exp(xi_3) (in
/// 1/value_unit) over its `levels` best levels and mid exp(xi_1), up to tick rounding.
///
/// Every level holds q shares, so the h-breakpoints H_k = k q mid are uniform.
/// Level k sits at log price offset +-b g_k + delta with g_k the h^2-weighted
/// centroid of (H_{k-1}, H_k]; that makes the fitted slope b + 1.5 delta / H_N
/// exactly, and delta is chosen so the two best quotes average to the mid.
inline OrderBook book_from_state(const Vec& xi, const SynthConfig& cfg, Timestamp ts = 0) {
    if (xi.size() != 3 || !xi.allFinite()) throw Error("synth.InvalidState", "state must be a finite 3-vector");
    const double mid = std::exp(xi(0));
    const double beta_minus = std::exp(xi(1)) / cfg.value_unit;
    const double beta_plus = std::exp(xi(2)) / cfg.value_unit;
    const auto q = std::max<Quantity>(1, std::llround(cfg.level_notional / mid));
    const int n = cfg.levels;

    std::vector<double> g(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        const double hi = mid * static_cast<double>(q) * k;
        const double lo = mid * static_cast<double>(q) * (k - 1);
        g[static_cast<std::size_t>(k - 1)] = (2.0 / 3.0) * (hi * hi * hi - lo * lo * lo) / (hi * hi - lo * lo);
    }
    const double depth = mid * static_cast<double>(q) * n;

    double delta = 0.0;
    double bp = beta_plus;
    double bm = beta_minus;
    for (int it = 0; it < 100; ++it) {
        bp = beta_plus - 1.5 * delta / depth;
        bm = beta_minus + 1.5 * delta / depth;
        const double next = -std::log(0.5 * (std::exp(bp * g[0]) + std::exp(-bm * g[0])));
        if (std::abs(next - delta) <= 1e-17) {
            delta = next;
            break;
        }
        delta = next;
    }

    std::vector<PriceLevel> bids, asks;
    bids.reserve(static_cast<std::size_t>(n));
    asks.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const auto gk = g[static_cast<std::size_t>(k)];
        asks.push_back({Price::round_to_tick(mid * std::exp(bp * gk + delta), cfg.tick), q});
        bids.push_back({Price::round_to_tick(mid * std::exp(-bm * gk + delta), cfg.tick), q});
    }
    for (int k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const bool collide = k > 0 && (asks[i].price <= asks[i - 1].price || bids[i].price >= bids[i - 1].price);
        if (collide || bids[i].price.units() <= 0) {
            throw Error("synth.DegenerateTicks", "tick " + cfg.tick.to_string() + " is too coarse to separate level " +
                                                     std::to_string(k + 1) + " at mid " + std::to_string(mid));
        }
    }
    if (asks[0].price.units() - bids[0].price.units() < cfg.tick.units()) {
        throw Error("synth.DegenerateTicks", "spread is below one tick at mid " + std::to_string(mid));
    }
    return OrderBook(std::move(bids), std::move(asks), ts);
}

struct SynthDataset {
    std::vector<OrderBook> snapshots;
    std::vector<ImpactObservation> truth;  // rendered-from values, profile included
    StateSeries states;                    // underlying xi, profile excluded
};

namespace detail {

inline ImpactObservation truth_observation(const OrderBook& book, double ln_mid, double ln_bm, double ln_bp) {
    // Both sides have the same depth, so the two-sided slope is the plain average.
    const double bm = std::exp(ln_bm);
    const double bp = std::exp(ln_bp);
    return {book.timestamp(), std::exp(ln_mid), bm, bp, 0.5 * (bm + bp), false};
}

} // namespace detail

/// Simulates xi at every grid point of every day (the overnight gap counts as
/// one step), adds the profile to ln beta-/+ and renders one book per sample.
inline SynthDataset generate(const SynthConfig& cfg) {
    cfg.validate();
    const auto grid = cfg.grid();
    const std::size_t per_day = grid.size();
    const std::size_t total = per_day * cfg.days;
    const Vec xi0 = cfg.initial ? *cfg.initial : equilibrium(cfg.truth);

    SynthDataset out;
    out.states.interval_ns = cfg.interval_ns;
    out.states.step = cfg.step;
    out.states.xi.resize(static_cast<Eigen::Index>(total), 3);
    out.states.ts.resize(total);
    if (total > 1) {
        const PathArray path = simulate(cfg.truth, xi0, {total - 1, cfg.step, 1, cfg.seed, 1});
        for (std::size_t i = 0; i < total; ++i) out.states.xi.row(static_cast<Eigen::Index>(i)) = path.state(0, i);
    } else {
        out.states.xi.row(0) = xi0;
    }
    std::vector<std::size_t> bucket(per_day);
    for (std::size_t k = 0; k < per_day; ++k) bucket[k] = cfg.scheme.bucket_of(grid[k]);
    for (std::size_t i = 0; i < total; ++i) {
        const auto day = cfg.first_day + static_cast<std::int64_t>(i / per_day);
        out.states.ts[i] = day * kNanosPerDay + grid[i % per_day];
    }

    out.snapshots.resize(total);
    out.truth.resize(total);
    auto render = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto b = bucket[i % per_day];
            Vec xi = out.states.xi.row(static_cast<Eigen::Index>(i)).transpose();
            xi(1) += cfg.offset_minus(b);
            xi(2) += cfg.offset_plus(b);
            out.snapshots[i] = book_from_state(xi, cfg, out.states.ts[i]);
            out.truth[i] = detail::truth_observation(out.snapshots[i], xi(0), xi(1), xi(2));
        }
    };
    // Days render independently; the result does not depend on the split.
    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(cfg.days)));
    if (jobs == 1) {
        render(0, total);
    } else {
        std::vector<std::jthread> workers;
        const std::size_t days_per_job = (cfg.days + jobs - 1) / jobs;
        for (unsigned j = 0; j < jobs; ++j) {
            const std::size_t begin = std::min(total, j * days_per_job * per_day);
            const std::size_t end = std::min(total, (j + 1) * days_per_job * per_day);
            if (begin < end) workers.emplace_back(render, begin, end);
        }
    }
    return out;
}

/// Order flow that turns each snapshot into the next. One order rests per price
/// level; at each sample time, vanished levels are cancelled, resized levels are
/// modified and new levels are added, in that order, so the book is never crossed.
/// The flow for a day starts from an empty book, matching BookSampler's daily reset.
class SynthEventEmitter {
public:
    /// Events that move the current book to `book`, all stamped with book.timestamp().
    std::vector<OrderEvent> next(const OrderBook& book) {
        const auto day = day_index(book.timestamp());
        if (!started_ || day != day_) {
            for (auto& side : resting_) side.clear();
            day_ = day;
            started_ = true;
            serial_ = 0;
        }
        std::vector<OrderEvent> cancels, modifies, adds;
        for (auto s : {Side::Bid, Side::Ask}) {
            auto& resting = resting_[s == Side::Bid ? 0 : 1];
            std::map<Price, Quantity> target;
            for (const auto& lvl : book.side(s)) target.emplace(lvl.price, lvl.quantity);
            for (auto it = resting.begin(); it != resting.end();) {
                const auto found = target.find(it->first);
                if (found == target.end()) {
                    cancels.push_back({book.timestamp(), it->second.id, s, Action::Cancel, Price{}, 0});
                    it = resting.erase(it);
                    continue;
                }
                if (found->second != it->second.quantity) {
                    modifies.push_back({book.timestamp(), it->second.id, s, Action::Modify, it->first, found->second});
                    it->second.quantity = found->second;
                }
                ++it;
            }
            for (const auto& [price, qty] : target) {
                if (resting.contains(price)) continue;
                std::string id = "d" + std::to_string(day) + (s == Side::Bid ? "b" : "a") + std::to_string(serial_++);
                adds.push_back({book.timestamp(), id, s, Action::Add, price, qty});
                resting.emplace(price, Order{std::move(id), qty});
            }
        }
        std::vector<OrderEvent> out;
        out.reserve(cancels.size() + modifies.size() + adds.size());
        for (auto* group : {&cancels, &modifies, &adds}) {
            out.insert(out.end(), std::make_move_iterator(group->begin()), std::make_move_iterator(group->end()));
        }
        return out;
    }

private:
    struct Order {
        std::string id;
        Quantity quantity = 0;
    };

    std::map<Price, Order> resting_[2];
    std::int64_t day_ = 0;
    bool started_ = false;
    std::uint64_t serial_ = 0;
};

inline std::vector<OrderEvent> events_for(std::span<const OrderBook> snapshots) {
    SynthEventEmitter emitter;
    std::vector<OrderEvent> out;
    for (const auto& book : snapshots) {
        auto evs = emitter.next(book);
        out.insert(out.end(), std::make_move_iterator(evs.begin()), std::make_move_iterator(evs.end()));
    }
    return out;
}

} // namespace lobfactor
