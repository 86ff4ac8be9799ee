#pragma once

// Carrier lifetime model: Weibull fit of surviving-bit-flip exchange counts,
// survival probability of an aging carrier, and the effective detection and
// repair rates when transfers can stall on carrier replacement.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "coldsim/special_math.hpp"
#include "coldsim/state_space.hpp"

namespace coldsim {

struct FitDiagnostics {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n_samples = 0;
};

struct WeibullParams {
    double shape = 0.0;  // g
    double scale = 0.0;  // y, in exchanges
    std::optional<FitDiagnostics> fit;
};

// Least-squares fit on the linearized CDF: with median-rank plotting
// positions W_i = (i - 0.3) / (N + 0.4) over the sorted sample, regress
// ln(-ln(1 - W_i)) on ln t_i; the slope is the shape, exp(-intercept/shape)
// the scale.
inline WeibullParams fit_weibull(std::span<const double> exchange_counts) {
    const std::size_t n = exchange_counts.size();
    if (n < 3) {
        throw std::invalid_argument("fit_weibull: need at least 3 samples");
    }
    std::vector<double> t(exchange_counts.begin(), exchange_counts.end());
    for (double v : t) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("fit_weibull: exchange counts must be positive");
        }
    }
    std::sort(t.begin(), t.end());
    if (t.front() == t.back()) {
        throw std::invalid_argument("fit_weibull: samples are all equal, slope undefined");
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (static_cast<double>(i + 1) - 0.3) / (static_cast<double>(n) + 0.4);
        const double x = std::log(t[i]);
        const double y = std::log(-std::log1p(-w));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double dn = static_cast<double>(n);
    const double den = dn * sxx - sx * sx;
    const double slope = (dn * sxy - sx * sy) / den;
    const double intercept = (sy - slope * sx) / dn;
    if (!(slope > 0.0)) {
        throw std::invalid_argument("fit_weibull: non-positive shape, data is not Weibull-like");
    }
    const double ss_num = dn * sxy - sx * sy;
    const double r2 = (ss_num * ss_num) / (den * (dn * syy - sy * sy));
    WeibullParams p;
    p.shape = slope;
    p.scale = std::exp(-intercept / slope);
    p.fit = FitDiagnostics{.slope = slope, .intercept = intercept, .r_squared = r2,
                           .n_samples = n};
    return p;
}

inline void check_weibull(const WeibullParams& w, const char* who) {
    if (!(w.shape > 0.0) || !std::isfinite(w.shape)) {
        throw std::invalid_argument(std::string(who) + ": shape must be positive");
    }
    if (!(w.scale > 0.0) || !std::isfinite(w.scale)) {
        throw std::invalid_argument(std::string(who) + ": scale must be positive");
    }
}

// Mean exchange budget y * Gamma(1 + 1/g).
inline double mean_exchanges(const WeibullParams& w) {
    check_weibull(w, "mean_exchanges");
    return w.scale * std::tgamma(1.0 + 1.0 / w.shape);
}

// Inverse-transform sample of the exchange budget at uniform draw u in (0,1):
// y * (-ln u)^(1/g). u = exp(-1) lands exactly on the scale.
inline double sbf_from_uniform(const WeibullParams& w, double u) {
    check_weibull(w, "sbf_from_uniform");
    if (!(u > 0.0 && u < 1.0)) {
        throw std::invalid_argument("sbf_from_uniform: u must lie in (0,1)");
    }
    return w.scale * std::pow(-std::log(u), 1.0 / w.shape);
}

namespace detail {

// 53-bit uniform in (0,1); the offset keeps 0 out of the range.
inline double uniform01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

// Integer exchange budget: the continuous draw rounded to the nearest count,
// floored at one exchange.
inline std::int64_t sample_sbf(const WeibullParams& w, std::mt19937_64& rng) {
    const double v = sbf_from_uniform(w, detail::uniform01(rng));
    return std::max<std::int64_t>(1, std::llround(v));
}

// Probability that a carrier with an exchange budget of l is still
// operational after running time t at exchange rate omega: the l-th exchange
// arrival of a rate-omega Poisson process has not happened, Q(l, omega*t).
inline double carrier_survival(double l_budget, double omega, double t) {
    if (!(l_budget >= 1.0)) {
        throw std::invalid_argument("carrier_survival: budget must be >= 1");
    }
    if (!(omega >= 0.0)) {
        throw std::invalid_argument("carrier_survival: omega must be nonnegative");
    }
    if (!(t >= 0.0)) {
        throw std::invalid_argument("carrier_survival: t must be nonnegative");
    }
    if (omega == 0.0 || t == 0.0) return 1.0;
    return upper_regularized_gamma(l_budget, omega * t);
}

// Exponential rates of the chain; phi may be +infinity (instant carrier
// replacement) and omega may be 0 (carriers never wear out).
struct RateParams {
    double lambda = 0.0;  // node failure rate, per hour
    double mu = 0.0;      // rebuild rate, per hour
    double theta = 0.0;   // failure detection rate, per hour
    double phi = std::numeric_limits<double>::infinity();  // carrier repair rate
    double omega = 0.0;   // exchange rate, per hour

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw std::invalid_argument("RateParams: lambda must be positive and finite");
        }
        if (!(mu > 0.0) || !std::isfinite(mu)) {
            throw std::invalid_argument("RateParams: mu must be positive and finite");
        }
        if (!(theta > 0.0) || !std::isfinite(theta)) {
            throw std::invalid_argument("RateParams: theta must be positive and finite");
        }
        if (!(phi > 0.0)) {
            throw std::invalid_argument("RateParams: phi must be positive (inf allowed)");
        }
        if (!(omega >= 0.0) || !std::isfinite(omega)) {
            throw std::invalid_argument("RateParams: omega must be nonnegative and finite");
        }
    }

    bool instant_carrier_repair() const { return std::isinf(phi); }
};

// Rate of an exponential stage serialized with possible carrier repairs:
// 1 / (1/phi + sum of stage means). Degrades to the bare stage rate as
// phi -> infinity.
inline double exp_tail_rate(double phi, std::span<const double> stage_rates) {
    if (!(phi > 0.0)) {
        throw std::invalid_argument("exp_tail_rate: phi must be positive (inf allowed)");
    }
    double mean = std::isinf(phi) ? 0.0 : 1.0 / phi;
    for (double r : stage_rates) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw std::invalid_argument("exp_tail_rate: stage rates must be positive and finite");
        }
        mean += 1.0 / r;
    }
    return 1.0 / mean;
}

namespace detail {

inline void check_survivals(std::span<const double> b, const char* who) {
    for (double v : b) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument(std::string(who) +
                                        ": survival probabilities must lie in [0,1]");
        }
    }
}

}  // namespace detail

// Effective aggregate detection rate with j undetected failures whose
// carriers are operational with probabilities failed_survivals:
// j*theta - theta^2/(theta+phi) * sum (1 - beta_m). Failed carriers make
// detection wait on a rate-phi replacement first.
inline double detection_rate(int j, double phi, double theta,
                             std::span<const double> failed_survivals) {
    if (j < 0) throw std::invalid_argument("detection_rate: j must be >= 0");
    if (static_cast<int>(failed_survivals.size()) != j) {
        throw std::invalid_argument("detection_rate: need one survival per undetected failure");
    }
    if (!(theta > 0.0) || !std::isfinite(theta)) {
        throw std::invalid_argument("detection_rate: theta must be positive and finite");
    }
    if (!(phi > 0.0)) {
        throw std::invalid_argument("detection_rate: phi must be positive (inf allowed)");
    }
    detail::check_survivals(failed_survivals, "detection_rate");
    if (j == 0) return 0.0;
    double penalty = 0.0;
    for (double b : failed_survivals) penalty += 1.0 - b;
    // theta^2/(theta+phi) is exactly 0 at phi = inf under IEEE arithmetic.
    return static_cast<double>(j) * theta - theta * theta / (theta + phi) * penalty;
}

namespace detail {

// Sum of the first x harmonic terms; 0 at x = 0. Rebuild reads fan in from
// x distinct sources, so a stalled source adds a coupon-collector factor.
inline double harmonic_or_zero(int x) {
    return x == 0 ? 0.0 : harmonic_sum(static_cast<std::uint64_t>(x));
}

}  // namespace detail

// Effective aggregate repair rate from a state with i available and z
// detected nodes. The z writer carriers give the pooled write rate
// mu_z = z*mu - mu^2/(mu+phi) * sum (1 - beta over detected); each rebuild
// reads from k sources drawn among the i available nodes, of which l have
// non-operational carriers with the hypergeometric weight
// C(i-l, k-x) C(l, x) / C(i, k) of drawing x stalled sources, and a stalled
// draw serializes H(x)/phi of expected replacement wait with the write.
inline double repair_rate(int i, int z, int k, double phi, double mu,
                          std::span<const double> available_survivals,
                          std::span<const double> detected_survivals) {
    if (k < 1 || i < k) throw std::invalid_argument("repair_rate: need i >= k >= 1");
    if (z < 1) throw std::invalid_argument("repair_rate: need z >= 1");
    if (static_cast<int>(available_survivals.size()) != i) {
        throw std::invalid_argument("repair_rate: need one survival per available node");
    }
    if (static_cast<int>(detected_survivals.size()) != z) {
        throw std::invalid_argument("repair_rate: need one survival per detected node");
    }
    if (!(mu > 0.0) || !std::isfinite(mu)) {
        throw std::invalid_argument("repair_rate: mu must be positive and finite");
    }
    if (!(phi > 0.0)) {
        throw std::invalid_argument("repair_rate: phi must be positive (inf allowed)");
    }
    detail::check_survivals(available_survivals, "repair_rate");
    detail::check_survivals(detected_survivals, "repair_rate");

    double writer_penalty = 0.0;
    for (double b : detected_survivals) writer_penalty += 1.0 - b;
    const double mu_z = static_cast<double>(z) * mu -
                        mu * mu / (mu + phi) * writer_penalty;

    // psi[o] = probability exactly o of the i source carriers are operational.
    const auto psi = poisson_binomial_pmf(available_survivals);
    const double total_draws = static_cast<double>(binomial(i, k));
    double rate = 0.0;
    for (int l = 0; l <= i; ++l) {  // l = stalled sources in the pool
        const double pl = psi[static_cast<std::size_t>(i - l)];
        if (pl == 0.0) continue;
        const int x_lo = std::max(0, k - (i - l));
        const int x_hi = std::min(l, k);
        for (int x = x_lo; x <= x_hi; ++x) {  // x = stalled sources drawn
            const double weight =
                static_cast<double>(binomial(i - l, k - x)) *
                static_cast<double>(binomial(l, x)) / total_draws;
            const double stall_mean =
                std::isinf(phi) ? 0.0 : detail::harmonic_or_zero(x) / phi;
            rate += pl * weight / (1.0 / mu_z + stall_mean);
        }
    }
    return rate;
}

}  // namespace coldsim
