#pragma once

// JSON and tidy-CSV serialization of profiles, calibration reports, impulse
// responses and autocovariances. Matrices are row-major nested arrays.

#include <complex>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobfactor/dynamics.hpp"
#include "lobfactor/observations_csv.hpp"
#include "lobfactor/sde_calib.hpp"
#include "lobfactor/seasonal.hpp"

namespace lobfactor {

using ojson = nlohmann::ordered_json;

inline ojson matrix_to_json(const Mat& m) {
    ojson rows = ojson::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ojson row = ojson::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ojson vector_to_json(const Vec& v) {
    ojson out = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

template <typename Json>
Mat matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw Error("io.BadReport", what + " must be a nested array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error("io.BadReport", what + " has ragged rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& x = row[static_cast<std::size_t>(c)];
            if (!x.is_number()) throw Error("io.BadReport", what + " has a non-numeric entry");
            m(i, c) = x.template get<double>();
        }
    }
    return m;
}

template <typename Json>
Vec vector_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw Error("io.BadReport", what + " must be an array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw Error("io.BadReport", what + " has a non-numeric entry");
        v(static_cast<Eigen::Index>(i)) = j[i].template get<double>();
    }
    return v;
}

// ---- seasonal profile ----

inline ojson profile_to_json(const SeasonalProfile& p) {
    ojson j;
    j["window"] = p.scheme.window.to_string();
    j["bucket_seconds"] = p.scheme.width_ns / kNanosPerSecond;
    ojson buckets = ojson::array();
    for (std::size_t b = 0; b < p.beta_minus.size(); ++b) {
        const auto [lo, hi] = p.scheme.bounds(b);
        buckets.push_back({lo / kNanosPerSecond, hi / kNanosPerSecond});
    }
    j["buckets"] = std::move(buckets);
    j["beta_minus"] = p.beta_minus;
    j["beta_plus"] = p.beta_plus;
    j["counts"] = p.counts;
    j["grand_mean_minus"] = p.grand_mean_minus;
    j["grand_mean_plus"] = p.grand_mean_plus;
    return j;
}

inline SeasonalProfile profile_from_json(const nlohmann::json& j) {
    try {
        SeasonalProfile p;
        p.scheme.window = TradingWindow::parse(j.at("window").get<std::string>());
        p.scheme.width_ns = j.at("bucket_seconds").get<std::int64_t>() * kNanosPerSecond;
        p.beta_minus = j.at("beta_minus").get<std::vector<double>>();
        p.beta_plus = j.at("beta_plus").get<std::vector<double>>();
        p.counts = j.value("counts", std::vector<std::size_t>(p.beta_minus.size(), 0));
        p.grand_mean_minus = j.at("grand_mean_minus").get<double>();
        p.grand_mean_plus = j.at("grand_mean_plus").get<double>();
        if (p.beta_minus.size() != p.scheme.count() || p.beta_plus.size() != p.scheme.count()) {
            throw Error("io.BadProfile", "profile coefficients do not match its bucket scheme");
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error("io.BadProfile", std::string("malformed profile JSON: ") + e.what());
    }
}

// ---- calibration report ----

struct CalibrationReport {
    SdeParams params;
    double step_seconds = 600.0;  // real time of one model time unit
    std::optional<Calibration> fit;  // present when produced by calibrate
};

inline ojson report_to_json(const Calibration& cal, double step_seconds) {
    const auto n = cal.params.dim();
    ojson j;
    j["A"] = matrix_to_json(cal.params.A);
    j["a"] = vector_to_json(cal.params.a);
    j["Sigma"] = matrix_to_json(cal.params.sigma);
    j["Q"] = matrix_to_json(cal.params.q());
    ojson ev = ojson::array();
    for (Eigen::Index i = 0; i < n; ++i) ev.push_back({{"re", cal.eigenvalues(i).real()}, {"im", cal.eigenvalues(i).imag()}});
    j["eigenvalues"] = std::move(ev);
    j["eigenvectors"] = {{"re", matrix_to_json(cal.eigenvectors.real())}, {"im", matrix_to_json(cal.eigenvectors.imag())}};
    j["stationary"] = cal.stationary;
    j["near_singular_B"] = cal.near_singular_B;
    j["stderr"] = {{"A", matrix_to_json(cal.se.A)}, {"a", vector_to_json(cal.se.a)}, {"Q", matrix_to_json(cal.se.Q)}};
    j["discrete"] = {{"B", matrix_to_json(cal.discrete.params.B)},
                     {"b", vector_to_json(cal.discrete.params.b)},
                     {"V", matrix_to_json(cal.discrete.params.V)}};
    j["n_pairs"] = cal.discrete.n_pairs;
    j["step_seconds"] = step_seconds;
    return j;
}

/// Reads A, a, Sigma and step_seconds; every other field is optional.
inline CalibrationReport report_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("io.BadReport", "report must be a JSON object");
    for (const char* key : {"A", "a", "Sigma"}) {
        if (!j.contains(key)) throw Error("io.BadReport", std::string("report is missing '") + key + "'");
    }
    CalibrationReport r;
    r.params.A = matrix_from_json(j["A"], "A");
    r.params.a = vector_from_json(j["a"], "a");
    r.params.sigma = matrix_from_json(j["Sigma"], "Sigma");
    const auto n = r.params.A.rows();
    if (r.params.A.cols() != n || r.params.a.size() != n || r.params.sigma.rows() != n || r.params.sigma.cols() != n) {
        throw Error("io.BadReport", "A, a and Sigma have inconsistent dimensions");
    }
    if (j.contains("step_seconds")) {
        if (!j["step_seconds"].is_number()) throw Error("io.BadReport", "step_seconds must be a number");
        r.step_seconds = j["step_seconds"].get<double>();
        if (!(r.step_seconds > 0.0)) throw Error("io.BadReport", "step_seconds must be positive");
    }
    return r;
}

// ---- tidy CSV outputs ----

inline void write_impulse_csv(std::ostream& out, const ResponsePath& r) {
    out << "step,variable,median,lo95,hi95\n";
    for (Eigen::Index k = 0; k < r.median.rows(); ++k) {
        for (int v = 0; v < 3; ++v) {
            out << k << ',' << to_string(static_cast<ResponseVariable>(v)) << ',' << format_double(r.median(k, v))
                << ',' << format_double(r.lo95(k, v)) << ',' << format_double(r.hi95(k, v)) << '\n';
        }
    }
}

inline void write_autocovariance_csv(std::ostream& out, const std::vector<Mat>& gamma) {
    out << "lag,i,j,value\n";
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        for (Eigen::Index i = 0; i < gamma[k].rows(); ++i) {
            for (Eigen::Index c = 0; c < gamma[k].cols(); ++c) {
                out << k << ',' << i << ',' << c << ',' << format_double(gamma[k](i, c)) << '\n';
            }
        }
    }
}

inline void write_paths_csv(std::ostream& out, const PathArray& paths) {
    out << "path,step";
    for (Eigen::Index i = 0; i < paths.dim(); ++i) out << ",xi" << i + 1;
    out << '\n';
    for (std::size_t p = 0; p < paths.n_paths(); ++p) {
        for (std::size_t k = 0; k <= paths.steps(); ++k) {
            out << p << ',' << k;
            const auto x = paths.state(p, k);
            for (Eigen::Index i = 0; i < paths.dim(); ++i) out << ',' << format_double(x(i));
            out << '\n';
        }
    }
}

} // namespace lobfactor
