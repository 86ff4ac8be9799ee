#pragma once

// Special functions used by the reliability model: regularized incomplete
// gamma and beta functions, Poisson-binomial distribution, harmonic sums.
// All routines are pure and thread-safe.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coldsim {

namespace detail {

inline constexpr int kMaxSeriesIter = 50000;
inline constexpr double kConvergeEps = 1e-15;
inline constexpr double kLentzTiny = 1e-300;

// Series expansion of the lower regularized gamma P(a,x); valid for x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kMaxSeriesIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kConvergeEps) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw std::runtime_error("gamma_p_series: no convergence for a=" +
                             std::to_string(a) + " x=" + std::to_string(x));
}

// Modified Lentz continued fraction for the upper regularized gamma Q(a,x);
// valid for x >= a+1.
inline double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kLentzTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxSeriesIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kLentzTiny) d = kLentzTiny;
        c = b + an / c;
        if (std::abs(c) < kLentzTiny) c = kLentzTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kConvergeEps) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw std::runtime_error("gamma_q_cf: no convergence for a=" +
                             std::to_string(a) + " x=" + std::to_string(x));
}

}  // namespace detail

// Lower regularized incomplete gamma P(a,x) = gamma(a,x)/Gamma(a), a > 0, x >= 0.
inline double lower_regularized_gamma(double a, double x) {
    if (!(a > 0.0) || !std::isfinite(a)) {
        throw std::invalid_argument("lower_regularized_gamma: a must be positive");
    }
    if (!(x >= 0.0)) {
        throw std::invalid_argument("lower_regularized_gamma: x must be nonnegative");
    }
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    // Far tails of wide distributions underflow; short-circuit them so the
    // series/fraction never runs in a regime where it converges slowly.
    if (a > 1e4) {
        const double sigma = std::sqrt(a);
        if (x < a - 40.0 * sigma) return 0.0;
        if (x > a + 40.0 * sigma) return 1.0;
    }
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

// Upper regularized incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a) = 1 - P(a,x).
inline double upper_regularized_gamma(double a, double x) {
    if (!(a > 0.0) || !std::isfinite(a)) {
        throw std::invalid_argument("upper_regularized_gamma: a must be positive");
    }
    if (!(x >= 0.0)) {
        throw std::invalid_argument("upper_regularized_gamma: x must be nonnegative");
    }
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (a > 1e4) {
        const double sigma = std::sqrt(a);
        if (x < a - 40.0 * sigma) return 1.0;
        if (x > a + 40.0 * sigma) return 0.0;
    }
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

// Unnormalized upper incomplete gamma Gamma(l,x) for integer l >= 1.
// Equals (l-1)! * exp(-x) * sum_{m=0}^{l-1} x^m / m!.
inline double upper_incomplete_gamma(std::int64_t l, double x) {
    if (l < 1) {
        throw std::invalid_argument("upper_incomplete_gamma: l must be a positive integer");
    }
    if (!(x >= 0.0)) {
        throw std::invalid_argument("upper_incomplete_gamma: x must be nonnegative");
    }
    const double a = static_cast<double>(l);
    const double q = upper_regularized_gamma(a, x);
    // Gamma(l) overflows past l = 171; the regularized form stays usable, the
    // raw value honestly saturates.
    return q * std::exp(std::lgamma(a));
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kLentzTiny) d = kLentzTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxSeriesIter; ++m) {
        const double dm = static_cast<double>(m);
        const double m2 = 2.0 * dm;
        double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kLentzTiny) d = kLentzTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kLentzTiny) c = kLentzTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kLentzTiny) d = kLentzTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kLentzTiny) c = kLentzTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kConvergeEps) return h;
    }
    throw std::runtime_error("betacf: no convergence for a=" + std::to_string(a) +
                             " b=" + std::to_string(b) + " x=" + std::to_string(x));
}

}  // namespace detail

// Regularized incomplete beta I_x(a,b), a > 0, b > 0, x in [0,1].
inline double regularized_incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("regularized_incomplete_beta: a and b must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("regularized_incomplete_beta: x must lie in [0,1]");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(lbt);
    // The fraction converges fastest on the side where x is below the mean.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * detail::betacf(a, b, x) / a;
    }
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

// I_x(a,b) for integer a,b >= 1 via the binomial-tail identity
// I_x(a,b) = sum_{j=a}^{a+b-1} C(a+b-1,j) x^j (1-x)^{a+b-1-j},
// evaluated in log space. Verification alternate for the continued fraction.
inline double regularized_incomplete_beta_by_sum(double x, std::int64_t a, std::int64_t b) {
    if (a < 1 || b < 1) {
        throw std::invalid_argument("regularized_incomplete_beta_by_sum: a and b must be >= 1");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("regularized_incomplete_beta_by_sum: x must lie in [0,1]");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const std::int64_t nn = a + b - 1;
    const double lx = std::log(x);
    const double l1mx = std::log1p(-x);
    const double lgn = std::lgamma(static_cast<double>(nn) + 1.0);
    double sum = 0.0;
    for (std::int64_t j = a; j <= nn; ++j) {
        const double dj = static_cast<double>(j);
        const double lterm = lgn - std::lgamma(dj + 1.0) -
                             std::lgamma(static_cast<double>(nn - j) + 1.0) +
                             dj * lx + static_cast<double>(nn - j) * l1mx;
        sum += std::exp(lterm);
    }
    return std::min(sum, 1.0);
}

namespace detail {

inline void check_probs(std::span<const double> probs, const char* who) {
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument(std::string(who) +
                                        ": probabilities must lie in [0,1]");
        }
    }
}

}  // namespace detail

// PMF of the Poisson-binomial distribution (number of successes among
// independent non-identical Bernoulli trials) by direct convolution.
// Returns a vector of size probs.size()+1.
inline std::vector<double> poisson_binomial_pmf(std::span<const double> probs) {
    detail::check_probs(probs, "poisson_binomial_pmf");
    std::vector<double> pmf(probs.size() + 1, 0.0);
    pmf[0] = 1.0;
    std::size_t upto = 0;
    for (double p : probs) {
        ++upto;
        for (std::size_t c = upto; c > 0; --c) {
            pmf[c] = pmf[c] * (1.0 - p) + pmf[c - 1] * p;
        }
        pmf[0] *= (1.0 - p);
    }
    return pmf;
}

// P(successes <= o). o past the trial count gives 1, negative o gives 0.
inline double poisson_binomial_cdf(std::int64_t o, std::span<const double> probs) {
    if (o < 0) return 0.0;
    const auto pmf = poisson_binomial_pmf(probs);
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(o), probs.size());
    double sum = 0.0;
    for (std::size_t c = 0; c <= top; ++c) sum += pmf[c];
    return std::min(sum, 1.0);
}

// Characteristic-function route: inverse DFT over L = probs.size()+1 points.
// Verification alternate for the convolution path.
inline std::vector<double> poisson_binomial_pmf_dft(std::span<const double> probs) {
    detail::check_probs(probs, "poisson_binomial_pmf_dft");
    const std::size_t n = probs.size();
    const std::size_t big_l = n + 1;
    const double w = 2.0 * std::acos(-1.0) / static_cast<double>(big_l);
    std::vector<std::complex<double>> xv(big_l);
    for (std::size_t l = 0; l < big_l; ++l) {
        const std::complex<double> ei(std::cos(w * static_cast<double>(l)),
                                      std::sin(w * static_cast<double>(l)));
        std::complex<double> prod(1.0, 0.0);
        for (double p : probs) prod *= (1.0 + (ei - 1.0) * p);
        xv[l] = prod;
    }
    std::vector<double> pmf(big_l, 0.0);
    for (std::size_t c = 0; c < big_l; ++c) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t l = 0; l < big_l; ++l) {
            const double ang = -w * static_cast<double>(l) * static_cast<double>(c);
            acc += xv[l] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        pmf[c] = std::max(0.0, acc.real() / static_cast<double>(big_l));
    }
    return pmf;
}

inline double poisson_binomial_cdf_dft(std::int64_t o, std::span<const double> probs) {
    if (o < 0) return 0.0;
    const auto pmf = poisson_binomial_pmf_dft(probs);
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(o), probs.size());
    double sum = 0.0;
    for (std::size_t c = 0; c <= top; ++c) sum += pmf[c];
    return std::min(sum, 1.0);
}

enum class HarmonicMode { exact, approx };

inline constexpr double kEulerMascheroni = 0.5772156649015329;

// H(x) = sum_{m=1}^{x} 1/m. The approx mode uses the asymptotic expansion
// ln x + gamma + 1/(2x) - 1/(12x^2) + 1/(120x^4); relative error < 1e-6
// for x >= 5.
inline double harmonic_sum(std::uint64_t x, HarmonicMode mode = HarmonicMode::exact) {
    if (x == 0) {
        throw std::invalid_argument("harmonic_sum: x must be >= 1");
    }
    if (mode == HarmonicMode::exact) {
        // Summing ascending keeps the small late terms from being swallowed.
        double sum = 0.0;
        for (std::uint64_t m = x; m >= 1; --m) sum += 1.0 / static_cast<double>(m);
        return sum;
    }
    const double xd = static_cast<double>(x);
    const double x2 = xd * xd;
    return std::log(xd) + kEulerMascheroni + 1.0 / (2.0 * xd) - 1.0 / (12.0 * x2) +
           1.0 / (120.0 * x2 * x2);
}

}  // namespace coldsim
