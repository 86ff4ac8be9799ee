#pragma once

// State space of the recovery chain: triples (i, j, z) with i available,
// j failed-undetected, and z detected-rebuilding nodes, i + j + z = n and
// i >= k, plus one absorbing total-failure state. Indexing is canonical so
// generator rows can be addressed without lookup tables.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace coldsim {

inline constexpr int kDefaultMaxNodes = 64;

// Exact binomial coefficient in 64-bit, throwing on overflow.
inline std::uint64_t binomial(std::int64_t n, std::int64_t r) {
    if (r < 0 || n < 0 || r > n) return 0;
    if (r > n - r) r = n - r;
    unsigned __int128 acc = 1;
    for (std::int64_t d = 1; d <= r; ++d) {
        acc = acc * static_cast<std::uint64_t>(n - r + d) / static_cast<std::uint64_t>(d);
        if (acc > std::numeric_limits<std::uint64_t>::max()) {
            throw std::overflow_error("binomial: result exceeds 64 bits");
        }
    }
    return static_cast<std::uint64_t>(acc);
}

struct SystemState {
    int available = 0;
    int failed = 0;
    int detected = 0;
    bool total_failure = false;

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

namespace detail {

inline void check_nk(int n, int k, const char* who) {
    if (k < 1) throw std::invalid_argument(std::string(who) + ": k must be >= 1");
    if (n < k) throw std::invalid_argument(std::string(who) + ": n must be >= k");
}

}  // namespace detail

// Number of states when nodes distinguish s lifecycle stages (s = 3 is the
// modeled chain; other s are counted, not enumerated):
// 1 + C(n-k+s-1, n-k), the compositions of at most n-k failures into s-1
// non-available stages plus the absorbing state.
inline std::uint64_t count_states(int n, int k, int s = 3) {
    detail::check_nk(n, k, "count_states");
    if (s < 2) throw std::invalid_argument("count_states: s must be >= 2");
    return binomial(static_cast<std::int64_t>(n - k) + s - 1,
                    static_cast<std::int64_t>(n - k)) + 1;
}

struct CountBounds {
    std::uint64_t lower = 0;
    std::uint64_t upper = 0;
};

// Closed-form sandwich for count_states: lower = sum_{j=0}^{s-1} C(n-k+1, j),
// upper = C(s+n-k, s-1). Lower meets count_states exactly at s = 2 and s = 3.
inline CountBounds count_bounds(int n, int k, int s = 3) {
    detail::check_nk(n, k, "count_bounds");
    if (s < 2) throw std::invalid_argument("count_bounds: s must be >= 2");
    CountBounds out;
    for (int j = 0; j <= s - 1; ++j) {
        out.lower += binomial(static_cast<std::int64_t>(n - k) + 1, j);
    }
    out.upper = binomial(static_cast<std::int64_t>(s + n - k), s - 1);
    return out;
}

// Sharper lower bound: the j >= 2 binomials are damped by
// ((s-2)/(j-1))^(j-1) instead of dropped. Coincides with count_bounds.lower
// at s in {2, 3}; a real (non-integer) count in between.
inline double count_lower_bound_weighted(int n, int k, int s = 3) {
    detail::check_nk(n, k, "count_lower_bound_weighted");
    if (s < 2) throw std::invalid_argument("count_lower_bound_weighted: s must be >= 2");
    double acc = 1.0 + static_cast<double>(n - k + 1);
    for (int j = 2; j <= s - 1; ++j) {
        const double w = std::pow(static_cast<double>(s - 2) / static_cast<double>(j - 1),
                                  static_cast<double>(j - 1));
        acc += w * static_cast<double>(binomial(static_cast<std::int64_t>(n - k) + 1, j));
    }
    return acc;
}

// Canonical zero-based index of a state. Non-absorbing states are grouped by
// the number of non-available nodes d = n - i (depth), ordered by z inside a
// group: idx = d(d+1)/2 + z. The absorbing state takes the final index.
inline int canonical_index(const SystemState& st, int n, int k) {
    detail::check_nk(n, k, "canonical_index");
    const int total_failure_idx =
        static_cast<int>(count_states(n, k, 3)) - 1;
    if (st.total_failure) return total_failure_idx;
    if (st.available + st.failed + st.detected != n) {
        throw std::invalid_argument("canonical_index: node counts must sum to n");
    }
    if (st.available < k || st.failed < 0 || st.detected < 0) {
        throw std::invalid_argument("canonical_index: state outside the reachable set");
    }
    const int d = n - st.available;
    return d * (d + 1) / 2 + st.detected;
}

// Inverse of canonical_index.
inline SystemState state_at_index(int index, int n, int k) {
    detail::check_nk(n, k, "state_at_index");
    const int n_states = static_cast<int>(count_states(n, k, 3));
    if (index < 0 || index >= n_states) {
        throw std::out_of_range("state_at_index: index out of range");
    }
    if (index == n_states - 1) {
        return SystemState{.available = 0, .failed = 0, .detected = 0, .total_failure = true};
    }
    // Depth from the triangular-number floor; exact for the index range here.
    const int d = static_cast<int>(
        (std::sqrt(8.0 * static_cast<double>(index) + 1.0) - 1.0) / 2.0);
    const int z = index - d * (d + 1) / 2;
    return SystemState{.available = n - d, .failed = d - z, .detected = z,
                       .total_failure = false};
}

// Fully enumerated three-stage state space; index order matches
// canonical_index.
class StateSpace {
  public:
    StateSpace(int n, int k, int max_nodes = kDefaultMaxNodes) : n_(n), k_(k) {
        detail::check_nk(n, k, "StateSpace");
        if (n > max_nodes) {
            throw std::invalid_argument("StateSpace: n exceeds the configured maximum of " +
                                        std::to_string(max_nodes));
        }
        const int n_states = static_cast<int>(count_states(n, k, 3));
        states_.reserve(static_cast<std::size_t>(n_states));
        for (int d = 0; d <= n - k; ++d) {
            for (int z = 0; z <= d; ++z) {
                states_.push_back(SystemState{.available = n - d, .failed = d - z,
                                              .detected = z, .total_failure = false});
            }
        }
        states_.push_back(SystemState{.available = 0, .failed = 0, .detected = 0,
                                      .total_failure = true});
        if (static_cast<int>(states_.size()) != n_states) {
            throw std::logic_error("StateSpace: enumeration does not match count_states");
        }
    }

    int n() const { return n_; }
    int k() const { return k_; }
    int size() const { return static_cast<int>(states_.size()); }
    int total_failure_index() const { return size() - 1; }
    const SystemState& state_at(int index) const { return states_.at(static_cast<std::size_t>(index)); }
    int index_of(const SystemState& st) const { return canonical_index(st, n_, k_); }
    const std::vector<SystemState>& states() const { return states_; }

  private:
    int n_;
    int k_;
    std::vector<SystemState> states_;
};

}  // namespace coldsim
