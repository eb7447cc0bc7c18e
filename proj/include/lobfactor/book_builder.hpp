#pragma once

// Book reconstruction from an order-event stream under price/time priority,
// and sampling of the prevailing book on a daily time grid.

#include <functional>
#include <iterator>
#include <list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lobfactor/lob_core.hpp"
#include "lobfactor/time.hpp"

namespace lobfactor {

enum class Action : std::uint8_t { Add, Cancel, Modify, Execute };

struct OrderEvent {
    Timestamp ts = 0;
    std::string order_id;
    Side side = Side::Bid;
    Action action = Action::Add;
    Price price;            // Add and Modify only
    Quantity quantity = 0;  // Add/Modify: size; Execute: executed amount (0 = all)

    friend bool operator==(const OrderEvent&, const OrderEvent&) = default;
};

struct Trade {
    Timestamp ts = 0;
    std::string aggressor_id;  // empty for an Execute event
    std::string resting_id;
    Side resting_side = Side::Bid;
    Price price;
    Quantity quantity = 0;

    friend bool operator==(const Trade&, const Trade&) = default;
};

struct RestingOrder {
    std::string id;
    Price price;
    Quantity quantity = 0;
    std::uint64_t seq = 0;
};

/// Quantity bookkeeping: added == resting + cancelled + traded at all times.
/// A match of q shares counts 2q as traded, one leg per order.
struct FlowAccounting {
    Quantity added = 0;
    Quantity cancelled = 0;
    Quantity traded = 0;
};

class BookState {
public:
    /// Applies one event and returns the trades it caused.
    std::vector<Trade> apply(const OrderEvent& ev) {
        std::vector<Trade> trades;
        switch (ev.action) {
        case Action::Add:
            if (ev.price.units() <= 0 || ev.quantity <= 0) {
                throw Error("book_builder.InvalidEvent", "Add '" + ev.order_id + "' needs positive price and quantity");
            }
            if (index_.contains(ev.order_id)) {
                throw Error("book_builder.DuplicateOrderId", "order id '" + ev.order_id + "' is already resting");
            }
            flow_.added += ev.quantity;
            insert(ev.ts, ev.order_id, ev.side, ev.price, ev.quantity, trades);
            break;
        case Action::Cancel: {
            auto loc = locate(ev.order_id);
            flow_.cancelled += loc.it->quantity;
            erase(loc);
            break;
        }
        case Action::Modify: {
            if (ev.price.units() <= 0 || ev.quantity <= 0) {
                throw Error("book_builder.InvalidEvent", "Modify '" + ev.order_id + "' needs positive price and quantity");
            }
            auto loc = locate(ev.order_id);
            if (ev.side != loc.side) {
                throw Error("book_builder.InvalidEvent", "Modify '" + ev.order_id + "' cannot change side");
            }
            if (ev.price == loc.price && ev.quantity <= loc.it->quantity) {
                // Same price, size down: keeps time priority.
                flow_.cancelled += loc.it->quantity - ev.quantity;
                loc.it->quantity = ev.quantity;
            } else {
                flow_.cancelled += loc.it->quantity;
                erase(loc);
                flow_.added += ev.quantity;
                insert(ev.ts, ev.order_id, ev.side, ev.price, ev.quantity, trades);
            }
            break;
        }
        case Action::Execute: {
            auto loc = locate(ev.order_id);
            const Quantity q = ev.quantity == 0 ? loc.it->quantity : ev.quantity;
            if (q < 0 || q > loc.it->quantity) {
                throw Error("book_builder.InvalidEvent", "Execute of " + std::to_string(q) + " exceeds resting size of '" +
                                                             ev.order_id + "'");
            }
            trades.push_back({ev.ts, "", ev.order_id, loc.side, loc.price, q});
            flow_.traded += q;
            loc.it->quantity -= q;
            if (loc.it->quantity == 0) erase(loc);
            break;
        }
        }
        if (!bids_.empty() && !asks_.empty() && bids_.begin()->first >= asks_.begin()->first) {
            throw Error("book_builder.CrossedBookCorruption",
                        "book crossed after event for '" + ev.order_id + "'");
        }
        return trades;
    }

    /// Aggregated view of resting orders.
    OrderBook snapshot(Timestamp ts = 0) const {
        return OrderBook(aggregate(bids_), aggregate(asks_), ts);
    }

    /// Resting orders of one side in priority order.
    std::vector<RestingOrder> resting(Side s) const {
        std::vector<RestingOrder> out;
        auto collect = [&](const auto& book) {
            for (const auto& [price, queue] : book) out.insert(out.end(), queue.begin(), queue.end());
        };
        if (s == Side::Bid) collect(bids_); else collect(asks_);
        return out;
    }

    Quantity resting_quantity() const {
        Quantity total = 0;
        for (const auto& [id, loc] : index_) total += loc.it->quantity;
        return total;
    }

    std::size_t order_count() const noexcept { return index_.size(); }
    const FlowAccounting& accounting() const noexcept { return flow_; }

    void reset() { *this = BookState{}; }

private:
    using Queue = std::list<RestingOrder>;
    using BidMap = std::map<Price, Queue, std::greater<>>;
    using AskMap = std::map<Price, Queue>;

    struct Locator {
        Side side;
        Price price;
        Queue::iterator it;
    };

    template <typename Map>
    static std::vector<PriceLevel> aggregate(const Map& book) {
        std::vector<PriceLevel> levels;
        levels.reserve(book.size());
        for (const auto& [price, queue] : book) {
            Quantity q = 0;
            for (const auto& o : queue) q += o.quantity;
            levels.push_back({price, q});
        }
        return levels;
    }

    Locator& locate(const std::string& id) {
        auto found = index_.find(id);
        if (found == index_.end()) {
            throw Error("book_builder.UnknownOrderId", "no resting order with id '" + id + "'");
        }
        return found->second;
    }

    void erase(const Locator& loc) {
        const std::string id = loc.it->id;
        auto drop = [&](auto& book) {
            auto level = book.find(loc.price);
            level->second.erase(loc.it);
            if (level->second.empty()) book.erase(level);
        };
        if (loc.side == Side::Bid) drop(bids_); else drop(asks_);
        index_.erase(id);
    }

    void insert(Timestamp ts, const std::string& id, Side side, Price price, Quantity qty, std::vector<Trade>& trades) {
        auto marketable = [&](Price best) { return side == Side::Bid ? best <= price : best >= price; };
        auto match = [&](auto& opposite, Side opposite_side) {
            while (qty > 0 && !opposite.empty() && marketable(opposite.begin()->first)) {
                auto level = opposite.begin();
                auto& queue = level->second;
                auto& front = queue.front();
                const Quantity q = std::min(qty, front.quantity);
                trades.push_back({ts, id, front.id, opposite_side, level->first, q});
                flow_.traded += 2 * q;
                qty -= q;
                front.quantity -= q;
                if (front.quantity == 0) {
                    index_.erase(front.id);
                    queue.pop_front();
                    if (queue.empty()) opposite.erase(level);
                }
            }
        };
        if (side == Side::Bid) match(asks_, Side::Ask); else match(bids_, Side::Bid);
        if (qty == 0) return;

        auto rest = [&](auto& book) {
            auto& queue = book[price];
            queue.push_back({id, price, qty, next_seq_++});
            index_[id] = Locator{side, price, std::prev(queue.end())};
        };
        if (side == Side::Bid) rest(bids_); else rest(asks_);
    }

    BidMap bids_;
    AskMap asks_;
    std::unordered_map<std::string, Locator> index_;
    std::uint64_t next_seq_ = 1;
    FlowAccounting flow_;
};

/// Returns the resting book after applying events in order.
inline OrderBook replay(std::span<const OrderEvent> events) {
    BookState state;
    Timestamp last = 0;
    for (const auto& ev : events) {
        state.apply(ev);
        last = ev.ts;
    }
    return state.snapshot(last);
}

/// Optional opening book for a day (UTC day index); loaded before the day's first event.
using OpeningBookFn = std::function<std::optional<OrderBook>(std::int64_t day)>;

/// Streaming sampler: feed time-ordered events, collect the prevailing book at
/// window_start + k * interval for every day that has at least one event inside
/// the trading window. The book resets to empty (or the opening book) each day.
class BookSampler {
public:
    using Sink = std::function<void(const OrderBook&)>;

    BookSampler(std::int64_t interval_ns, TradingWindow window, Sink sink, OpeningBookFn opening = {})
        : interval_ns_(interval_ns), window_(window), sink_(std::move(sink)), opening_(std::move(opening)) {
        if (interval_ns_ <= 0) throw Error("book_builder.InvalidInterval", "sampling interval must be positive");
    }

    void push(const OrderEvent& ev) {
        if (started_ && ev.ts < last_ts_) {
            throw OutOfOrderEvent(ev.ts, "event at " + format_iso8601(ev.ts) + " precedes " + format_iso8601(last_ts_));
        }
        const auto day = day_index(ev.ts);
        if (!started_ || day != day_) start_day(day);
        started_ = true;
        last_ts_ = ev.ts;
        emit_until(ev.ts, /*inclusive=*/false);
        if (window_.contains(ev.ts)) day_active_ = true;
        state_.apply(ev);
    }

    void finish() {
        if (started_) end_day();
        started_ = false;
    }

    const BookState& state() const noexcept { return state_; }

private:
    void start_day(std::int64_t day) {
        if (started_) end_day();
        day_ = day;
        day_active_ = false;
        pending_.clear();
        state_.reset();
        next_grid_ = day * kNanosPerDay + window_.start_ns;
        if (opening_) {
            if (auto book = opening_(day)) {
                int n = 0;
                for (auto s : {Side::Bid, Side::Ask}) {
                    for (const auto& lvl : book->side(s)) {
                        state_.apply({day * kNanosPerDay, "__open_" + std::to_string(n++), s, Action::Add, lvl.price,
                                      lvl.quantity});
                    }
                }
            }
        }
    }

    // Grid points strictly before `ts` (or at it, if inclusive) are final.
    void emit_until(Timestamp ts, bool inclusive) {
        const Timestamp end = day_ * kNanosPerDay + window_.end_ns;
        while (next_grid_ <= end && (next_grid_ < ts || (inclusive && next_grid_ == ts))) {
            pending_.push_back(state_.snapshot(next_grid_));
            next_grid_ += interval_ns_;
        }
    }

    void end_day() {
        emit_until(day_ * kNanosPerDay + window_.end_ns, /*inclusive=*/true);
        if (day_active_) {
            for (const auto& b : pending_) sink_(b);
        }
        pending_.clear();
    }

    std::int64_t interval_ns_;
    TradingWindow window_;
    Sink sink_;
    OpeningBookFn opening_;
    BookState state_;
    std::vector<OrderBook> pending_;
    bool started_ = false;
    bool day_active_ = false;
    std::int64_t day_ = 0;
    Timestamp last_ts_ = 0;
    Timestamp next_grid_ = 0;
};

/// Convenience wrapper around BookSampler for an in-memory event list.
inline std::vector<OrderBook> sample_books(std::span<const OrderEvent> events, double interval_seconds,
                                           TradingWindow window, OpeningBookFn opening = {}) {
    std::vector<OrderBook> out;
    BookSampler sampler(static_cast<std::int64_t>(std::llround(interval_seconds * kNanosPerSecond)), window,
                        [&](const OrderBook& b) { out.push_back(b); }, std::move(opening));
    for (const auto& ev : events) sampler.push(ev);
    sampler.finish();
    return out;
}

} // namespace lobfactor
