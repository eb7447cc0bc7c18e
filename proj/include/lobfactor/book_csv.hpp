#pragma once

// Snapshot CSV: header "side,price,quantity", one row per level, side in {B, A}.

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lobfactor/lob_core.hpp"

namespace lobfactor {

inline void write_book_csv(std::ostream& out, const OrderBook& book) {
    out << "side,price,quantity\n";
    for (const auto& lvl : book.bids()) out << "B," << lvl.price.to_string() << ',' << lvl.quantity << '\n';
    for (const auto& lvl : book.asks()) out << "A," << lvl.price.to_string() << ',' << lvl.quantity << '\n';
}

inline std::string book_to_csv(const OrderBook& book) {
    std::ostringstream os;
    write_book_csv(os, book);
    return os.str();
}

/// Rows may repeat a price; they are merged by the OrderBook constructor.
inline OrderBook read_book_csv(std::istream& in, Timestamp ts = 0) {
    std::string line;
    if (!std::getline(in, line)) throw Error("io.BadCsv", "snapshot CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "side,price,quantity") {
        throw Error("io.BadCsv", "snapshot CSV header must be 'side,price,quantity', got '" + line + "'");
    }
    std::vector<PriceLevel> bids;
    std::vector<PriceLevel> asks;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw Error("io.BadCsv", "row " + std::to_string(row) + " needs three fields");
        }
        const std::string side = line.substr(0, c1);
        const Price price = Price::parse(std::string_view(line).substr(c1 + 1, c2 - c1 - 1));
        Quantity qty = 0;
        try {
            std::size_t used = 0;
            const std::string qs = line.substr(c2 + 1);
            qty = std::stoll(qs, &used);
            if (used != qs.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error("io.BadCsv", "row " + std::to_string(row) + " has a malformed quantity");
        }
        if (side == "B") {
            bids.push_back({price, qty});
        } else if (side == "A") {
            asks.push_back({price, qty});
        } else {
            throw Error("io.BadCsv", "row " + std::to_string(row) + " has side '" + side + "', expected B or A");
        }
    }
    return OrderBook(std::move(bids), std::move(asks), ts);
}

inline OrderBook book_from_csv(const std::string& text, Timestamp ts = 0) {
    std::istringstream is(text);
    return read_book_csv(is, ts);
}

} // namespace lobfactor
