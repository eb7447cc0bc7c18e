#pragma once

// Observations CSV: header "ts,mid,beta_minus,beta_plus,beta", ts in ISO-8601,
// numbers in round-trip precision. Deseasonalized files start with the comment
// line "# deseasonalized: true".

#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lobfactor/impact_fit.hpp"

namespace lobfactor {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_observations_csv(std::ostream& out, std::span<const ImpactObservation> obs,
                                   bool deseasonalized = false) {
    if (deseasonalized) out << "# deseasonalized: true\n";
    out << "ts,mid,beta_minus,beta_plus,beta\n";
    for (const auto& o : obs) {
        out << format_iso8601(o.ts) << ',' << format_double(o.mid) << ',' << format_double(o.beta_minus) << ','
            << format_double(o.beta_plus) << ',' << format_double(o.beta) << '\n';
    }
}

struct ObservationsFile {
    std::vector<ImpactObservation> observations;
    bool deseasonalized = false;
};

inline ObservationsFile read_observations_csv(std::istream& in) {
    ObservationsFile file;
    std::string line;
    bool header = false;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line == "# deseasonalized: true") file.deseasonalized = true;
            continue;
        }
        if (!header) {
            if (line != "ts,mid,beta_minus,beta_plus,beta") {
                throw Error("io.BadCsv", "observations header must be 'ts,mid,beta_minus,beta_plus,beta'");
            }
            header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 5) throw Error("io.BadCsv", "observations row " + std::to_string(row) + " needs 5 fields");
        ImpactObservation o;
        o.ts = parse_iso8601(fields[0]);
        try {
            o.mid = std::stod(fields[1]);
            o.beta_minus = std::stod(fields[2]);
            o.beta_plus = std::stod(fields[3]);
            o.beta = std::stod(fields[4]);
        } catch (const std::exception&) {
            throw Error("io.BadCsv", "observations row " + std::to_string(row) + " has a malformed number");
        }
        file.observations.push_back(o);
    }
    if (!header) throw Error("io.BadCsv", "observations file has no header");
    return file;
}

} // namespace lobfactor
