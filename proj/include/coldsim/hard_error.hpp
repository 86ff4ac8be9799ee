#pragma once

// Hard-error model: probability that a full-capacity read hits at least one
// unrecoverable error, combined with mechanical damage, and the resulting
// per-failure survival probability of a rebuild.

#include <cmath>
#include <span>
#include <stdexcept>

#include "coldsim/special_math.hpp"
#include "coldsim/state_space.hpp"

namespace coldsim {

enum class UcerUnit { bit, byte };

// epsilon = 1 - (1 - ucer)^capacity, evaluated in log space so tiny rates do
// not collapse to zero. capacity counts the same unit ucer is quoted per.
inline double epsilon_from_ucer(double ucer, double capacity_units) {
    if (!(ucer >= 0.0 && ucer < 1.0)) {
        throw std::invalid_argument("epsilon_from_ucer: ucer must lie in [0,1)");
    }
    if (!(capacity_units > 0.0) || !std::isfinite(capacity_units)) {
        throw std::invalid_argument("epsilon_from_ucer: capacity must be positive and finite");
    }
    return -std::expm1(capacity_units * std::log1p(-ucer));
}

struct HardErrorParams {
    double ucer = 0.0;
    double capacity_bits = 0.0;
    double kappa = 0.0;    // mechanical damage probability per full read
    double epsilon = 0.0;  // at-least-one-unrecoverable-error probability
    double eta = 0.0;      // combined: 1 - (1-epsilon)(1-kappa)

    // capacity_bytes is converted to the unit the rate is quoted per.
    static HardErrorParams from_ucer(double ucer, double capacity_bytes,
                                     UcerUnit unit, double kappa) {
        if (!(kappa >= 0.0 && kappa < 1.0)) {
            throw std::invalid_argument("HardErrorParams: kappa must lie in [0,1)");
        }
        if (!(capacity_bytes > 0.0) || !std::isfinite(capacity_bytes)) {
            throw std::invalid_argument("HardErrorParams: capacity must be positive and finite");
        }
        HardErrorParams p;
        p.ucer = ucer;
        p.capacity_bits = capacity_bytes * 8.0;
        p.kappa = kappa;
        const double units = (unit == UcerUnit::bit) ? p.capacity_bits : capacity_bytes;
        p.epsilon = epsilon_from_ucer(ucer, units);
        p.eta = 1.0 - (1.0 - p.epsilon) * (1.0 - kappa);
        return p;
    }

    static HardErrorParams from_rates(double epsilon, double kappa) {
        if (!(epsilon >= 0.0 && epsilon < 1.0)) {
            throw std::invalid_argument("HardErrorParams: epsilon must lie in [0,1)");
        }
        if (!(kappa >= 0.0 && kappa < 1.0)) {
            throw std::invalid_argument("HardErrorParams: kappa must lie in [0,1)");
        }
        HardErrorParams p;
        p.epsilon = epsilon;
        p.kappa = kappa;
        p.eta = 1.0 - (1.0 - epsilon) * (1.0 - kappa);
        return p;
    }
};

// Probability that a node failure from a state with i in-service nodes is
// survivable: fewer than i - k of the remaining reads fail, each read failing
// independently with probability eta. Equals 1 - I_eta(i-k, k+1); delta(k,..)
// is 0 because any failure at the redundancy floor is fatal.
inline double delta(int i, int k, double eta) {
    if (k < 1 || i < k) {
        throw std::invalid_argument("delta: need i >= k >= 1");
    }
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("delta: eta must lie in [0,1]");
    }
    if (i == k) return 0.0;
    if (eta == 0.0) return 1.0;
    if (eta == 1.0) return 0.0;
    return 1.0 - regularized_incomplete_beta(eta, static_cast<double>(i - k),
                                             static_cast<double>(k + 1));
}

// Direct binomial-sum route: sum_{l=0}^{i-k-1} C(i,l) eta^l (1-eta)^(i-l).
// Verification alternate for delta.
inline double delta_by_sum(int i, int k, double eta) {
    if (k < 1 || i < k) {
        throw std::invalid_argument("delta_by_sum: need i >= k >= 1");
    }
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("delta_by_sum: eta must lie in [0,1]");
    }
    if (i == k) return 0.0;
    if (eta == 0.0) return 1.0;
    if (eta == 1.0) return 0.0;
    const double leta = std::log(eta);
    const double l1me = std::log1p(-eta);
    const double lgi = std::lgamma(static_cast<double>(i) + 1.0);
    double sum = 0.0;
    for (int l = 0; l <= i - k - 1; ++l) {
        const double lterm = lgi - std::lgamma(static_cast<double>(l) + 1.0) -
                             std::lgamma(static_cast<double>(i - l) + 1.0) +
                             static_cast<double>(l) * leta +
                             static_cast<double>(i - l) * l1me;
        sum += std::exp(lterm);
    }
    return std::min(sum, 1.0);
}

}  // namespace coldsim
