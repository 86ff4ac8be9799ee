#pragma once

// Test-side oracles. Everything here is deliberately independent of the
// library implementation paths it checks: plain quadrature, brute-force
// enumeration, naive elimination, and direct chain walks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

// Adaptive Simpson quadrature on [a, b].
inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// Poisson-binomial CDF by exhaustive subset enumeration; probs.size() <= 20.
inline double poibin_cdf_bruteforce(std::int64_t o, const std::vector<double>& probs) {
    const std::size_t n = probs.size();
    if (n > 20) throw std::invalid_argument("brute force limited to 20 trials");
    double acc = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        const int successes = __builtin_popcount(mask);
        if (successes > o) continue;
        double p = 1.0;
        for (std::size_t t = 0; t < n; ++t) {
            p *= (mask >> t) & 1u ? probs[t] : 1.0 - probs[t];
        }
        acc += p;
    }
    return acc;
}

// Number of chain states for s lifecycle stages by direct enumeration of
// node-count tuples: available count i >= k plus s-1 other stage counts
// summing to n, plus one absorbing state.
inline std::uint64_t count_states_bruteforce(int n, int k, int s) {
    std::uint64_t count = 0;
    std::function<void(int, int)> rec = [&](int stage, int left) {
        if (stage == s - 2) {
            ++count;  // the last failure stage absorbs the remainder
            return;
        }
        for (int c = 0; c <= left; ++c) rec(stage + 1, left - c);
    };
    for (int i = k; i <= n; ++i) rec(0, n - i);
    return count + 1;
}

// Dense linear solve by Gauss-Jordan with partial pivoting; independent of
// the library's LU.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (a[piv][col] == 0.0) throw std::runtime_error("singular system");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        const double d = a[col][col];
        for (std::size_t c = 0; c < n; ++c) a[col][c] /= d;
        b[col] /= d;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0.0) continue;
            const double f = a[r][col];
            for (std::size_t c = 0; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    return b;
}

// Kolmogorov-Smirnov distance between a sample and a CDF.
inline double ks_distance(std::vector<double> sample,
                          const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t r = 0; r < sample.size(); ++r) {
        const double c = cdf(sample[r]);
        d = std::max(d, std::abs(c - static_cast<double>(r) / n));
        d = std::max(d, std::abs(static_cast<double>(r + 1) / n - c));
    }
    return d;
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_mean = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    out.mean = m;
    out.stderr_mean =
        std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    return out;
}

// Walk of the no-repair chain: nodes only fail, one at a time from the
// available population, each failure fatal with probability 1 - delta_i.
// Returns hours to total failure.
inline double pure_death_walk(int n, int k, double lambda,
                              const std::function<double(int)>& delta_i,
                              std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double t = 0.0;
    for (int i = n; i >= k; --i) {
        t += -std::log1p(-u01(rng)) / (static_cast<double>(i) * lambda);
        if (u01(rng) >= delta_i(i)) return t;
    }
    throw std::logic_error("pure death walk escaped the chain");
}

}  // namespace oracle
