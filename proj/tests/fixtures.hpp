#pragma once

// Shared test data: the example order book and the two reference parameter sets.

#include <array>
#include <random>
#include <string>
#include <vector>

#include "lobfactor/lobfactor.hpp"

namespace fixtures {

/// Code of the lobfactor::Error thrown by f, or "" if none.
template <typename F>
std::string error_code(F&& f) {
    try {
        f();
    } catch (const lobfactor::Error& e) {
        return e.code();
    }
    return "";
}

using lobfactor::Mat;
using lobfactor::Vec;

struct BookRow {
    lobfactor::Side side;
    const char* price;
    lobfactor::Quantity quantity;
};

/// The 26 rows of the example book, one resting order per row, in priority order.
inline const std::vector<BookRow>& example_rows() {
    using lobfactor::Side;
    static const std::vector<BookRow> rows = {
        {Side::Bid, "238.75", 140},   {Side::Bid, "238.75", 600},   {Side::Bid, "238.75", 3300},
        {Side::Bid, "238.75", 2000},  {Side::Bid, "238.5", 10000},  {Side::Bid, "238.5", 3900},
        {Side::Bid, "238.5", 15000},  {Side::Bid, "238.5", 1500},   {Side::Bid, "238.25", 10000},
        {Side::Bid, "238.25", 1000},  {Side::Bid, "238.25", 3500},  {Side::Bid, "238.25", 10000},
        {Side::Bid, "238.25", 200},   {Side::Ask, "239", 3700},     {Side::Ask, "239", 1000},
        {Side::Ask, "239", 5000},     {Side::Ask, "239", 1000},     {Side::Ask, "239", 1000},
        {Side::Ask, "239", 2500},     {Side::Ask, "239", 6600},     {Side::Ask, "239.25", 10000},
        {Side::Ask, "239.25", 2500},  {Side::Ask, "239.25", 3000},  {Side::Ask, "239.5", 600},
        {Side::Ask, "239.5", 5000},   {Side::Ask, "239.5", 800},
    };
    return rows;
}

inline lobfactor::OrderBook example_book(lobfactor::Timestamp ts = 0) {
    std::vector<lobfactor::PriceLevel> bids, asks;
    for (const auto& r : example_rows()) {
        (r.side == lobfactor::Side::Bid ? bids : asks).push_back({lobfactor::Price::parse(r.price), r.quantity});
    }
    return lobfactor::OrderBook(std::move(bids), std::move(asks), ts);
}

/// Random two-sided book on a 0.01 grid: 1-15 levels per side, gaps of 1-40 ticks.
inline lobfactor::OrderBook random_book(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nlev(1, 15), gap(1, 40), qty(1, 5000), base(5000, 50000);
    const std::int64_t tick = 1'000'000;  // 0.01
    const std::int64_t best_bid = base(rng) * tick;
    const std::int64_t best_ask = best_bid + gap(rng) * tick;
    std::vector<lobfactor::PriceLevel> bids, asks;
    std::int64_t p = best_bid;
    for (int i = 0, n = nlev(rng); i < n && p > tick; ++i, p -= gap(rng) * tick) {
        bids.push_back({lobfactor::Price::from_units(p), qty(rng)});
    }
    p = best_ask;
    for (int i = 0, n = nlev(rng); i < n; ++i, p += gap(rng) * tick) {
        asks.push_back({lobfactor::Price::from_units(p), qty(rng)});
    }
    return lobfactor::OrderBook(std::move(bids), std::move(asks));
}

inline Mat mat3(std::array<double, 9> v) {
    Mat m(3, 3);
    m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
    return m;
}

inline Vec vec3(double x, double y, double z) {
    Vec v(3);
    v << x, y, z;
    return v;
}

/// Printed (4-decimal) parameters; `sigma` is the printed matrix, which is not PSD.
struct PrintedParams {
    Mat A;
    Vec a;
    Mat sigma;
    Vec equilibrium;   // as reported
    Vec eigenvalues;   // as reported, in reported order
};

inline PrintedParams tdc() {
    return {mat3({-0.0014, -0.0003, 0.0004, -0.5132, -0.2466, -0.0035, -0.9445, -0.0133, -0.1952}),
            vec3(0.0080, 2.8240, 5.1970),
            mat3({0.0000, -0.0001, 0.0000, -0.0001, 0.1963, 0.0492, 0.0000, 0.0492, 0.1254}),
            vec3(5.5069, -0.0084, -0.0229), vec3(-0.0029, -0.2479, -0.1925)};
}

inline PrintedParams maersk() {
    return {mat3({-0.0002, -0.0001, 0.0001, 0.9247, -0.6417, 0.1336, -1.3643, 0.1465, -0.7363}),
            vec3(0.0022, -9.9966, 14.7467),
            mat3({0.0000, 0.0001, -0.0002, 0.0001, 2.0846, -0.0492, -0.0002, -0.0492, 1.7570}),
            vec3(10.9150, 0.1148, -0.1735), vec3(-0.0005, -0.8364, -0.5413)};
}

/// SdeParams with Sigma replaced by the PSD square root of Sigma Sigma^T.
inline lobfactor::SdeParams canonical(const PrintedParams& p) {
    return {p.A, p.a, lobfactor::psd_sqrt(p.sigma * p.sigma.transpose())};
}

} // namespace fixtures
