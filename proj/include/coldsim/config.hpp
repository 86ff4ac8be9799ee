#pragma once

// Configuration file handling, exchange-log ingestion, and sweep CSV output.
// The config format is flat `key = value` lines with `#` comments; unknown
// keys are rejected so a typo cannot silently fall back to a default rate.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "coldsim/hard_error.hpp"
#include "coldsim/markov.hpp"
#include "coldsim/simulate.hpp"

namespace coldsim {

// Misconfiguration: bad file, unknown key, type mismatch, invariant breach.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Bad field data in an exchange log.
class IngestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct FileConfig {
    int n = 0;
    int k = 0;
    double lambda_per_hour = 1.0 / 50000.0;
    double mu_per_hour = 1.0 / 24.0;
    double theta_per_hour = 1.0 / 8760.0;
    double phi_per_hour = 1.0 / 48.0;
    double omega_xph = 100.0;
    double ucer = 1e-19;
    UcerUnit ucer_unit = UcerUnit::bit;
    double tape_capacity_tb = 6.0;
    double kappa = 0.001;
    double weibull_shape = 0.67;
    double weibull_scale = 525985.0;
    SimMode mode = SimMode::exact;
    std::int64_t trials = 10000;
    double max_sim_hours = 1e9;
    std::uint64_t seed = 12345;
    int workers = 0;

    friend bool operator==(const FileConfig&, const FileConfig&) = default;

    SimConfig to_sim_config() const {
        SimConfig cfg;
        cfg.n = n;
        cfg.k = k;
        cfg.rates.lambda = lambda_per_hour;
        cfg.rates.mu = mu_per_hour;
        cfg.rates.theta = theta_per_hour;
        cfg.rates.phi = phi_per_hour;
        cfg.rates.omega = omega_xph;
        cfg.hard_error = HardErrorParams::from_ucer(ucer, tape_capacity_tb * 1e12,
                                                    ucer_unit, kappa);
        cfg.weibull = WeibullParams{.shape = weibull_shape, .scale = weibull_scale};
        cfg.mode = mode;
        cfg.trials = trials;
        cfg.max_sim_hours = max_sim_hours;
        cfg.seed = seed;
        cfg.workers = workers;
        cfg.validate();
        return cfg;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline double parse_double(const std::string& v, const std::string& key, int line) {
    if (v == "inf" || v == "+inf" || v == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": key \"" + key +
                          "\" expects a real number, got \"" + v + "\"");
    }
}

inline std::int64_t parse_int(const std::string& v, const std::string& key, int line) {
    std::int64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError("line " + std::to_string(line) + ": key \"" + key +
                          "\" expects an integer, got \"" + v + "\"");
    }
    return out;
}

inline std::uint64_t parse_uint(const std::string& v, const std::string& key, int line) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError("line " + std::to_string(line) + ": key \"" + key +
                          "\" expects a nonnegative integer, got \"" + v + "\"");
    }
    return out;
}

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// Parses config text. (n, k) are required; everything else has the default
// operating point baked in. Unknown or duplicate keys are errors with line
// numbers.
inline FileConfig parse_config_text(const std::string& text) {
    FileConfig out;
    std::map<std::string, int> seen;
    bool have_n = false, have_k = false;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::string stripped = detail::trim(raw);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line) +
                              ": expected key = value, got \"" + stripped + "\"");
        }
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string val = detail::trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line) + ": empty key");
        }
        if (val.empty()) {
            throw ConfigError("line " + std::to_string(line) + ": key \"" + key +
                              "\" has no value");
        }
        if (const auto it = seen.find(key); it != seen.end()) {
            throw ConfigError("line " + std::to_string(line) + ": key \"" + key +
                              "\" already set on line " + std::to_string(it->second));
        }
        seen[key] = line;

        if (key == "n") {
            out.n = static_cast<int>(detail::parse_int(val, key, line));
            have_n = true;
        } else if (key == "k") {
            out.k = static_cast<int>(detail::parse_int(val, key, line));
            have_k = true;
        } else if (key == "lambda_per_hour") {
            out.lambda_per_hour = detail::parse_double(val, key, line);
        } else if (key == "mu_per_hour") {
            out.mu_per_hour = detail::parse_double(val, key, line);
        } else if (key == "theta_per_hour") {
            out.theta_per_hour = detail::parse_double(val, key, line);
        } else if (key == "phi_per_hour") {
            out.phi_per_hour = detail::parse_double(val, key, line);
        } else if (key == "omega_xph") {
            out.omega_xph = detail::parse_double(val, key, line);
        } else if (key == "ucer") {
            out.ucer = detail::parse_double(val, key, line);
        } else if (key == "ucer_unit") {
            if (val == "bit") {
                out.ucer_unit = UcerUnit::bit;
            } else if (val == "byte") {
                out.ucer_unit = UcerUnit::byte;
            } else {
                throw ConfigError("line " + std::to_string(line) +
                                  ": key \"ucer_unit\" expects bit or byte, got \"" + val + "\"");
            }
        } else if (key == "tape_capacity_tb") {
            out.tape_capacity_tb = detail::parse_double(val, key, line);
        } else if (key == "kappa") {
            out.kappa = detail::parse_double(val, key, line);
        } else if (key == "weibull_shape") {
            out.weibull_shape = detail::parse_double(val, key, line);
        } else if (key == "weibull_scale") {
            out.weibull_scale = detail::parse_double(val, key, line);
        } else if (key == "mode") {
            if (val == "exact") {
                out.mode = SimMode::exact;
            } else if (val == "approx") {
                out.mode = SimMode::approx;
            } else {
                throw ConfigError("line " + std::to_string(line) +
                                  ": key \"mode\" expects exact or approx, got \"" + val + "\"");
            }
        } else if (key == "trials") {
            out.trials = detail::parse_int(val, key, line);
        } else if (key == "max_sim_hours") {
            out.max_sim_hours = detail::parse_double(val, key, line);
        } else if (key == "seed") {
            out.seed = detail::parse_uint(val, key, line);
        } else if (key == "workers") {
            out.workers = static_cast<int>(detail::parse_int(val, key, line));
        } else {
            throw ConfigError("line " + std::to_string(line) + ": unknown key \"" + key + "\"");
        }
    }
    if (!have_n || !have_k) {
        throw ConfigError("keys \"n\" and \"k\" are required");
    }
    // Surface invariant breaches with the offending key name.
    const auto check = [](bool ok, const char* key, const char* what) {
        if (!ok) {
            throw ConfigError(std::string("key \"") + key + "\" " + what);
        }
    };
    check(out.k >= 1, "k", "must be >= 1");
    check(out.n >= out.k, "n", "must be >= k");
    check(out.n <= kDefaultMaxNodes, "n", "exceeds the supported maximum of 64");
    check(out.lambda_per_hour > 0.0 && std::isfinite(out.lambda_per_hour),
          "lambda_per_hour", "must be positive and finite");
    check(out.mu_per_hour > 0.0 && std::isfinite(out.mu_per_hour),
          "mu_per_hour", "must be positive and finite");
    check(out.theta_per_hour > 0.0 && std::isfinite(out.theta_per_hour),
          "theta_per_hour", "must be positive and finite");
    check(out.phi_per_hour > 0.0, "phi_per_hour", "must be positive (inf allowed)");
    check(out.omega_xph >= 0.0 && std::isfinite(out.omega_xph),
          "omega_xph", "must be nonnegative and finite");
    check(out.ucer >= 0.0 && out.ucer < 1.0, "ucer", "must lie in [0,1)");
    check(out.tape_capacity_tb > 0.0 && std::isfinite(out.tape_capacity_tb),
          "tape_capacity_tb", "must be positive and finite");
    check(out.kappa >= 0.0 && out.kappa < 1.0, "kappa", "must lie in [0,1)");
    check(out.weibull_shape > 0.0 && std::isfinite(out.weibull_shape),
          "weibull_shape", "must be positive and finite");
    check(out.weibull_scale > 0.0 && std::isfinite(out.weibull_scale),
          "weibull_scale", "must be positive and finite");
    check(out.trials >= 1, "trials", "must be >= 1");
    check(out.max_sim_hours > 0.0, "max_sim_hours", "must be positive");
    check(out.workers >= 0, "workers", "must be >= 0");
    return out;
}

inline FileConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// Emits every key explicitly; parsing the result reproduces the struct.
inline std::string serialize_config(const FileConfig& c) {
    std::ostringstream os;
    os << "n = " << c.n << "\n";
    os << "k = " << c.k << "\n";
    os << "lambda_per_hour = " << detail::format_double(c.lambda_per_hour) << "\n";
    os << "mu_per_hour = " << detail::format_double(c.mu_per_hour) << "\n";
    os << "theta_per_hour = " << detail::format_double(c.theta_per_hour) << "\n";
    os << "phi_per_hour = " << detail::format_double(c.phi_per_hour) << "\n";
    os << "omega_xph = " << detail::format_double(c.omega_xph) << "\n";
    os << "ucer = " << detail::format_double(c.ucer) << "\n";
    os << "ucer_unit = " << (c.ucer_unit == UcerUnit::bit ? "bit" : "byte") << "\n";
    os << "tape_capacity_tb = " << detail::format_double(c.tape_capacity_tb) << "\n";
    os << "kappa = " << detail::format_double(c.kappa) << "\n";
    os << "weibull_shape = " << detail::format_double(c.weibull_shape) << "\n";
    os << "weibull_scale = " << detail::format_double(c.weibull_scale) << "\n";
    os << "mode = " << (c.mode == SimMode::exact ? "exact" : "approx") << "\n";
    os << "trials = " << c.trials << "\n";
    os << "max_sim_hours = " << detail::format_double(c.max_sim_hours) << "\n";
    os << "seed = " << c.seed << "\n";
    os << "workers = " << c.workers << "\n";
    return os.str();
}

struct IngestStats {
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

// Reads exchange counts: newline-delimited or CSV (one record per cell). An
// optional single header line is tolerated. Every cell must be a positive
// real; violations cite the line.
inline std::vector<double> ingest_exchange_log(const std::string& path,
                                               IngestStats* stats = nullptr) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open exchange log: " + path);
    std::vector<double> values;
    std::string raw;
    int line = 0;
    bool header_allowed = true;
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (detail::trim(raw).empty()) continue;
        std::vector<double> row;
        bool numeric = true;
        std::size_t start = 0;
        while (start <= raw.size()) {
            std::size_t comma = raw.find(',', start);
            if (comma == std::string::npos) comma = raw.size();
            const std::string cell = detail::trim(raw.substr(start, comma - start));
            start = comma + 1;
            if (cell.empty()) continue;
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument("trailing characters");
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (header_allowed) {
                header_allowed = false;
                continue;
            }
            throw IngestError("line " + std::to_string(line) + ": non-numeric entry in \"" +
                              raw + "\"");
        }
        header_allowed = false;
        for (double v : row) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw IngestError("line " + std::to_string(line) +
                                  ": exchange counts must be positive, got " +
                                  detail::format_double(v));
            }
            values.push_back(v);
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (values.empty()) throw IngestError("exchange log is empty: " + path);
    if (stats != nullptr) {
        stats->count = values.size();
        stats->min = lo;
        stats->max = hi;
        stats->mean = sum / static_cast<double>(values.size());
    }
    return values;
}

// One row per grid point; the analytic bounds repeat on every row so the
// CSV is directly plottable against the curves.
inline void emit_sweep_csv(std::span<const SweepPoint> points, double lower_bound_hours,
                           double upper_bound_hours, std::ostream& os) {
    if (points.empty()) {
        throw std::invalid_argument("emit_sweep_csv: no sweep results");
    }
    const auto num = [](double v) { return detail::format_double(v); };
    os << "axis_value,mttdl_hours,mttdl_stderr,mttdu_hours,mttdu_stderr,"
          "censored_fraction,lower_bound_hours,upper_bound_hours\n";
    for (const auto& p : points) {
        os << num(p.axis_value) << ',' << num(p.summary.mttdl.mean) << ','
           << num(p.summary.mttdl.stderr_mean) << ',' << num(p.summary.mttdu.mean) << ','
           << num(p.summary.mttdu.stderr_mean) << ',' << num(p.summary.censored_fraction)
           << ',' << num(lower_bound_hours) << ',' << num(upper_bound_hours) << '\n';
    }
}

inline void emit_sweep_csv(std::span<const SweepPoint> points, double lower_bound_hours,
                           double upper_bound_hours, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    emit_sweep_csv(points, lower_bound_hours, upper_bound_hours, out);
    if (!out.good()) throw std::runtime_error("write failed: " + path);
}

}  // namespace coldsim
