#pragma once

// Order book value types and the deterministic curve mathematics built on them:
// mid-price, total cost S(x), the relative price impact curve r(h) and the
// liquidity cost function phi(h) = integral of exp(r) from 0 to h.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lobfactor/error.hpp"
#include "lobfactor/time.hpp"

namespace lobfactor {

/// Exact decimal price, stored as an integer count of 1e-8 currency units.
class Price {
public:
    static constexpr std::int64_t kScale = 100'000'000;
    static constexpr int kDecimals = 8;

    constexpr Price() = default;

    static constexpr Price from_units(std::int64_t units) noexcept {
        Price p;
        p.units_ = units;
        return p;
    }

    /// Parses a plain decimal string ("238.75", "239", "0.0001"). No exponents.
    static Price parse(std::string_view s) {
        auto fail = [&] { throw Error("lob_core.BadPrice", "malformed price '" + std::string(s) + "'"); };
        if (s.empty()) fail();
        std::size_t i = 0;
        bool negative = false;
        if (s[0] == '-' || s[0] == '+') {
            negative = s[0] == '-';
            ++i;
        }
        std::int64_t whole = 0;
        std::int64_t frac = 0;
        int frac_digits = 0;
        bool any_digit = false;
        for (; i < s.size() && s[i] != '.'; ++i) {
            if (s[i] < '0' || s[i] > '9') fail();
            if (whole > (std::numeric_limits<std::int64_t>::max() / kScale - 9) / 10) fail();
            whole = whole * 10 + (s[i] - '0');
            any_digit = true;
        }
        if (i < s.size()) {
            for (++i; i < s.size(); ++i) {
                if (s[i] < '0' || s[i] > '9') fail();
                if (frac_digits == kDecimals) {
                    if (s[i] != '0') {
                        throw Error("lob_core.BadPrice",
                                    "price '" + std::string(s) + "' has more than 8 decimals");
                    }
                    continue;
                }
                frac = frac * 10 + (s[i] - '0');
                ++frac_digits;
                any_digit = true;
            }
        }
        if (!any_digit) fail();
        for (int k = frac_digits; k < kDecimals; ++k) frac *= 10;
        const std::int64_t u = whole * kScale + frac;
        return from_units(negative ? -u : u);
    }

    /// Nearest multiple of `tick` to `value`.
    static Price round_to_tick(double value, Price tick) {
        const double ticks = std::nearbyint(value * kScale / static_cast<double>(tick.units_));
        return from_units(static_cast<std::int64_t>(ticks) * tick.units_);
    }

    constexpr std::int64_t units() const noexcept { return units_; }
    double to_double() const noexcept { return static_cast<double>(units_) / kScale; }

    std::string to_string() const {
        const std::int64_t mag = units_ < 0 ? -units_ : units_;
        std::string out = (units_ < 0 ? "-" : "") + std::to_string(mag / kScale);
        std::int64_t frac = mag % kScale;
        if (frac != 0) {
            std::string digits = std::to_string(frac);
            digits.insert(0, static_cast<std::size_t>(kDecimals) - digits.size(), '0');
            while (digits.back() == '0') digits.pop_back();
            out += "." + digits;
        }
        return out;
    }

    constexpr auto operator<=>(const Price&) const noexcept = default;

private:
    std::int64_t units_ = 0;
};

using Quantity = std::int64_t;

/// Exact monetary amount in 1e-8 currency units; wide enough for price x quantity sums.
struct Money {
    __int128 units = 0;

    double to_double() const noexcept {
        const __int128 whole = units / Price::kScale;
        const __int128 frac = units % Price::kScale;
        return static_cast<double>(whole) + static_cast<double>(frac) / Price::kScale;
    }

    std::string to_string() const {
        __int128 mag = units < 0 ? -units : units;
        std::string whole;
        __int128 w = mag / Price::kScale;
        do {
            whole.insert(whole.begin(), static_cast<char>('0' + static_cast<int>(w % 10)));
            w /= 10;
        } while (w != 0);
        std::string out = (units < 0 ? "-" : "") + whole;
        const auto frac = static_cast<std::int64_t>(mag % Price::kScale);
        if (frac != 0) {
            std::string digits = std::to_string(frac);
            digits.insert(0, static_cast<std::size_t>(Price::kDecimals) - digits.size(), '0');
            while (digits.back() == '0') digits.pop_back();
            out += "." + digits;
        }
        return out;
    }

    friend constexpr bool operator==(const Money&, const Money&) = default;
};

struct PriceLevel {
    Price price;
    Quantity quantity = 0;

    friend constexpr bool operator==(const PriceLevel&, const PriceLevel&) = default;
};

enum class Side : std::uint8_t { Bid, Ask };

/// Immutable snapshot of a limit order book.
///
/// Bids are sorted by strictly decreasing price, asks by strictly increasing
/// price, equal prices are merged, and the book is never crossed.
class OrderBook {
public:
    OrderBook() = default;

    OrderBook(std::vector<PriceLevel> bids, std::vector<PriceLevel> asks, Timestamp ts = 0)
        : bids_(normalize(std::move(bids), Side::Bid)),
          asks_(normalize(std::move(asks), Side::Ask)),
          timestamp_(ts) {
        if (!bids_.empty() && !asks_.empty() && bids_.front().price >= asks_.front().price) {
            throw Error("lob_core.CrossedBook", "best bid " + bids_.front().price.to_string() +
                                                    " is not below best ask " +
                                                    asks_.front().price.to_string());
        }
    }

    std::span<const PriceLevel> bids() const noexcept { return bids_; }
    std::span<const PriceLevel> asks() const noexcept { return asks_; }
    std::span<const PriceLevel> side(Side s) const noexcept { return s == Side::Bid ? bids() : asks(); }
    Timestamp timestamp() const noexcept { return timestamp_; }

    bool empty() const noexcept { return bids_.empty() && asks_.empty(); }

    Price best_bid() const {
        if (bids_.empty()) throw Error("lob_core.EmptySide", "book has no bid levels");
        return bids_.front().price;
    }

    Price best_ask() const {
        if (asks_.empty()) throw Error("lob_core.EmptySide", "book has no ask levels");
        return asks_.front().price;
    }

    Quantity depth(Side s) const noexcept {
        Quantity total = 0;
        for (const auto& lvl : side(s)) total += lvl.quantity;
        return total;
    }

    OrderBook with_timestamp(Timestamp ts) const {
        OrderBook copy = *this;
        copy.timestamp_ = ts;
        return copy;
    }

    friend bool operator==(const OrderBook&, const OrderBook&) = default;

private:
    static std::vector<PriceLevel> normalize(std::vector<PriceLevel> levels, Side s) {
        for (const auto& lvl : levels) {
            if (lvl.price.units() <= 0 || lvl.quantity <= 0) {
                throw Error("lob_core.InvalidLevel", "level " + lvl.price.to_string() + " x " +
                                                         std::to_string(lvl.quantity) +
                                                         " must have positive price and quantity");
            }
        }
        if (s == Side::Bid) {
            std::stable_sort(levels.begin(), levels.end(),
                             [](const PriceLevel& a, const PriceLevel& b) { return a.price > b.price; });
        } else {
            std::stable_sort(levels.begin(), levels.end(),
                             [](const PriceLevel& a, const PriceLevel& b) { return a.price < b.price; });
        }
        std::vector<PriceLevel> merged;
        merged.reserve(levels.size());
        for (const auto& lvl : levels) {
            if (!merged.empty() && merged.back().price == lvl.price) {
                merged.back().quantity += lvl.quantity;
            } else {
                merged.push_back(lvl);
            }
        }
        return merged;
    }

    std::vector<PriceLevel> bids_;
    std::vector<PriceLevel> asks_;
    Timestamp timestamp_ = 0;
};

/// (best bid + best ask) / 2
inline double mid_price(const OrderBook& book) {
    const auto b = book.best_bid().units();
    const auto a = book.best_ask().units();
    return static_cast<double>(b + a) / (2.0 * Price::kScale);
}

/// S(x): exact cost of a market order of x shares. Negative x is a sale and
/// yields a negative cost (revenue).
inline Money total_cost(const OrderBook& book, Quantity x) {
    const auto levels = x >= 0 ? book.asks() : book.bids();
    const Quantity want = x >= 0 ? x : -x;
    Quantity left = want;
    __int128 units = 0;
    for (const auto& lvl : levels) {
        if (left == 0) break;
        const Quantity take = std::min(left, lvl.quantity);
        units += static_cast<__int128>(lvl.price.units()) * take;
        left -= take;
    }
    if (left > 0) throw InsufficientDepth(x, want - left);
    return Money{x >= 0 ? units : -units};
}

/// Marginal price s(x) of the x-th share: a nondecreasing step function,
/// +infinity past the ask depth and 0 past the bid depth. s(0) is the mid.
class MarginalPriceCurve {
public:
    explicit MarginalPriceCurve(const OrderBook& book) : book_(book) {}

    double operator()(double x) const {
        if (x == 0.0) return mid_price(book_);
        const auto levels = x > 0 ? book_.asks() : book_.bids();
        const double want = std::abs(x);
        double cum = 0.0;
        for (const auto& lvl : levels) {
            cum += static_cast<double>(lvl.quantity);
            if (want <= cum) return lvl.price.to_double();
        }
        return x > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    }

    double left_limit_at_zero() const { return book_.best_bid().to_double(); }
    double right_limit_at_zero() const { return book_.best_ask().to_double(); }

private:
    OrderBook book_;
};

/// One constant piece of an impact curve. On the ask side the piece covers
/// h in (previous extent, extent]; on the bid side h in [-extent, -previous extent).
struct ImpactStep {
    double extent = 0.0;
    double value = 0.0;
};

/// Relative price impact curve r(h) = ln s(h / mid) - ln mid as a step function
/// of the mark-to-market value h. The spread jump at h = 0 is kept: r(0+) > 0 > r(0-)
/// for a real book, and r(0) itself is defined as 0.
class ImpactCurve {
public:
    ImpactCurve(double mid, std::vector<ImpactStep> bid_steps, std::vector<ImpactStep> ask_steps)
        : mid_(mid), bid_(std::move(bid_steps)), ask_(std::move(ask_steps)) {
        if (!(mid_ > 0.0) || !std::isfinite(mid_)) {
            throw Error("lob_core.InvalidCurve", "mid-price must be positive and finite");
        }
        check_side(bid_, -1.0);
        check_side(ask_, +1.0);
        if (!bid_.empty() && !ask_.empty() && bid_.front().value > ask_.front().value) {
            throw Error("lob_core.InvalidCurve", "bid side of impact curve lies above ask side");
        }
    }

    double mid() const noexcept { return mid_; }
    std::span<const ImpactStep> bid_steps() const noexcept { return bid_; }
    std::span<const ImpactStep> ask_steps() const noexcept { return ask_; }

    /// Largest h with finite r on the ask side.
    double ask_depth() const noexcept { return ask_.empty() ? 0.0 : ask_.back().extent; }
    /// Largest |h| with finite r on the bid side.
    double bid_depth() const noexcept { return bid_.empty() ? 0.0 : bid_.back().extent; }

    double operator()(double h) const {
        if (h == 0.0) return 0.0;
        const auto& steps = h > 0 ? ask_ : bid_;
        const double u = std::abs(h);
        auto it = std::lower_bound(steps.begin(), steps.end(), u,
                                   [](const ImpactStep& s, double v) { return s.extent < v; });
        if (it == steps.end()) {
            return h > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        }
        return it->value;
    }

    double right_limit_at_zero() const {
        if (ask_.empty()) throw Error("lob_core.EmptySide", "impact curve has no ask side");
        return ask_.front().value;
    }

    double left_limit_at_zero() const {
        if (bid_.empty()) throw Error("lob_core.EmptySide", "impact curve has no bid side");
        return bid_.front().value;
    }

    /// phi(h) = integral of exp(r(z)) dz from 0 to h, exact on the step representation.
    double phi(double h) const {
        if (h == 0.0) return 0.0;
        const double sign = h > 0 ? 1.0 : -1.0;
        const auto& steps = h > 0 ? ask_ : bid_;
        const double u = std::abs(h);
        double acc = 0.0;
        double prev = 0.0;
        for (const auto& s : steps) {
            const double hi = std::min(u, s.extent);
            acc += (hi - prev) * std::exp(s.value);
            prev = s.extent;
            if (s.extent >= u) return sign * acc;
        }
        throw Error("lob_core.BeyondDepth", "phi evaluated beyond book depth");
    }

    /// Integral of h * r(h) over [lo, hi], exact on the step representation.
    double first_moment(double lo, double hi) const {
        if (lo > hi) return -first_moment(hi, lo);
        double total = 0.0;
        if (hi > 0.0) total += side_moment(ask_, std::max(lo, 0.0), hi);
        if (lo < 0.0) {
            // On the bid side substitute u = -h: integral over h in [lo, b] of h c dh
            // equals minus the integral over u in [-b, -lo] of u c du.
            total -= side_moment(bid_, std::max(-hi, 0.0), -lo);
        }
        return total;
    }

private:
    static void check_side(const std::vector<ImpactStep>& steps, double direction) {
        double prev_extent = 0.0;
        double prev_value = 0.0;
        bool first = true;
        for (const auto& s : steps) {
            if (!std::isfinite(s.extent) || !std::isfinite(s.value) || s.extent <= prev_extent) {
                throw Error("lob_core.InvalidCurve", "impact steps must have increasing finite extents");
            }
            if (!first && direction * (s.value - prev_value) < 0.0) {
                throw Error("lob_core.InvalidCurve", "impact curve must be nondecreasing");
            }
            prev_extent = s.extent;
            prev_value = s.value;
            first = false;
        }
    }

    // Integral of u * r over u in [a, b] with 0 <= a <= b, on one side's steps.
    static double side_moment(const std::vector<ImpactStep>& steps, double a, double b) {
        if (b <= a) return 0.0;
        double acc = 0.0;
        double prev = 0.0;
        for (const auto& s : steps) {
            const double lo = std::max(a, prev);
            const double hi = std::min(b, s.extent);
            if (hi > lo) acc += s.value * (hi * hi - lo * lo) / 2.0;
            prev = s.extent;
            if (s.extent >= b) return acc;
        }
        throw Error("lob_core.BeyondDepth", "integration window extends beyond book depth");
    }

    double mid_;
    std::vector<ImpactStep> bid_;
    std::vector<ImpactStep> ask_;
};

/// Builds r from a book. Breakpoints are mid x cumulative shares per level.
inline ImpactCurve impact_curve(const OrderBook& book) {
    const double mid = mid_price(book);
    // ln(p / mid) = log1p((2p - (bid + ask)) / (bid + ask)); the numerator is exact
    // in fixed point, so offsets near the mid keep full relative precision.
    const std::int64_t twice_mid = book.best_bid().units() + book.best_ask().units();
    auto build = [&](std::span<const PriceLevel> levels) {
        std::vector<ImpactStep> steps;
        steps.reserve(levels.size());
        Quantity cum = 0;
        for (const auto& lvl : levels) {
            cum += lvl.quantity;
            const auto diff = 2 * lvl.price.units() - twice_mid;
            steps.push_back({mid * static_cast<double>(cum),
                             std::log1p(static_cast<double>(diff) / static_cast<double>(twice_mid))});
        }
        return steps;
    };
    return ImpactCurve(mid, build(book.bids()), build(book.asks()));
}

/// Cost of an order worth h under the two-sided linear impact model
/// r(h) = beta_plus * h (h >= 0), beta_minus * h (h <= 0).
inline double phi_from_beta(double beta_minus, double beta_plus, double h) {
    if (beta_minus < 0.0 || beta_plus < 0.0) {
        throw Error("lob_core.NegativeBeta", "liquidity factors must be nonnegative");
    }
    const double beta = h >= 0.0 ? beta_plus : beta_minus;
    if (beta == 0.0) return h;
    return std::expm1(beta * h) / beta;
}

} // namespace lobfactor
