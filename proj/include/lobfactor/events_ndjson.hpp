#pragma once

// Event file format: NDJSON, one object per line with exactly the fields
// {ts, id, side, action, price, qty}. ts is ISO-8601 with nanoseconds, side is
// "bid"/"ask", action is "Add"/"Cancel"/"Modify"/"Execute", price is a decimal
// string (null when the action carries none).

#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "lobfactor/book_builder.hpp"

namespace lobfactor {

inline const char* to_string(Action a) {
    switch (a) {
    case Action::Add: return "Add";
    case Action::Cancel: return "Cancel";
    case Action::Modify: return "Modify";
    case Action::Execute: return "Execute";
    }
    return "?";
}

inline std::string event_to_ndjson(const OrderEvent& ev) {
    nlohmann::ordered_json j;
    j["ts"] = format_iso8601(ev.ts);
    j["id"] = ev.order_id;
    j["side"] = ev.side == Side::Bid ? "bid" : "ask";
    j["action"] = to_string(ev.action);
    if (ev.action == Action::Add || ev.action == Action::Modify) {
        j["price"] = ev.price.to_string();
    } else {
        j["price"] = nullptr;
    }
    j["qty"] = ev.quantity;
    return j.dump();
}

inline OrderEvent event_from_ndjson(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error("io.BadEvent", std::string("event line is not JSON: ") + e.what());
    }
    if (!j.is_object() || j.size() != 6) {
        throw Error("io.BadEvent", "event must be an object with fields ts, id, side, action, price, qty");
    }
    for (const char* key : {"ts", "id", "side", "action", "price", "qty"}) {
        if (!j.contains(key)) throw Error("io.BadEvent", std::string("event is missing '") + key + "'");
    }
    try {
        OrderEvent ev;
        ev.ts = parse_iso8601(j.at("ts").get<std::string>());
        ev.order_id = j.at("id").get<std::string>();
        const auto side = j.at("side").get<std::string>();
        if (side == "bid") ev.side = Side::Bid;
        else if (side == "ask") ev.side = Side::Ask;
        else throw Error("io.BadEvent", "unknown side '" + side + "'");
        const auto action = j.at("action").get<std::string>();
        if (action == "Add") ev.action = Action::Add;
        else if (action == "Cancel") ev.action = Action::Cancel;
        else if (action == "Modify") ev.action = Action::Modify;
        else if (action == "Execute") ev.action = Action::Execute;
        else throw Error("io.BadEvent", "unknown action '" + action + "'");
        const auto& price = j.at("price");
        if (price.is_string()) ev.price = Price::parse(price.get<std::string>());
        else if (price.is_number()) ev.price = Price::parse(price.dump());
        else if (!price.is_null()) throw Error("io.BadEvent", "price must be a decimal string or null");
        ev.quantity = j.at("qty").get<Quantity>();
        return ev;
    } catch (const nlohmann::json::exception& e) {
        throw Error("io.BadEvent", std::string("bad event field: ") + e.what());
    }
}

/// Calls `fn(event)` for every non-blank line of an NDJSON stream.
template <typename Fn>
void read_events_ndjson(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(event_from_ndjson(line));
        } catch (const OutOfOrderEvent&) {
            throw;
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline void write_events_ndjson(std::ostream& out, std::span<const OrderEvent> events) {
    for (const auto& ev : events) out << event_to_ndjson(ev) << '\n';
}

} // namespace lobfactor
