#pragma once

// Analytic machinery over the recovery chain: generator construction
// (memoryless and carrier-aware variants), uniformized jump chain,
// fundamental matrix, and the closed-form reliability bounds.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "coldsim/carrier.hpp"
#include "coldsim/hard_error.hpp"
#include "coldsim/special_math.hpp"
#include "coldsim/state_space.hpp"

namespace coldsim {

class Matrix {
  public:
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols),
          a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
        if (rows < 1 || cols < 1) {
            throw std::invalid_argument("Matrix: dimensions must be positive");
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& operator()(int r, int c) {
        return a_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
                  static_cast<std::size_t>(c)];
    }
    double operator()(int r, int c) const {
        return a_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
                  static_cast<std::size_t>(c)];
    }

  private:
    int rows_;
    int cols_;
    std::vector<double> a_;
};

namespace detail {

// LU decomposition with partial pivoting, factor stored in place.
struct Lu {
    Matrix lu;
    std::vector<int> perm;

    explicit Lu(Matrix m) : lu(std::move(m)), perm(static_cast<std::size_t>(lu.rows())) {
        const int n = lu.rows();
        if (lu.cols() != n) throw std::invalid_argument("Lu: matrix must be square");
        std::iota(perm.begin(), perm.end(), 0);
        for (int col = 0; col < n; ++col) {
            int piv = col;
            double best = std::abs(lu(perm[static_cast<std::size_t>(col)], col));
            for (int r = col + 1; r < n; ++r) {
                const double v = std::abs(lu(perm[static_cast<std::size_t>(r)], col));
                if (v > best) {
                    best = v;
                    piv = r;
                }
            }
            if (!(best > 0.0)) throw std::runtime_error("Lu: matrix is singular");
            std::swap(perm[static_cast<std::size_t>(col)], perm[static_cast<std::size_t>(piv)]);
            const int prow = perm[static_cast<std::size_t>(col)];
            for (int r = col + 1; r < n; ++r) {
                const int rr = perm[static_cast<std::size_t>(r)];
                const double f = lu(rr, col) / lu(prow, col);
                lu(rr, col) = f;
                for (int c = col + 1; c < n; ++c) lu(rr, c) -= f * lu(prow, c);
            }
        }
    }

    std::vector<double> solve(std::span<const double> b) const {
        const int n = lu.rows();
        std::vector<double> y(static_cast<std::size_t>(n));
        for (int r = 0; r < n; ++r) {
            double acc = b[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])];
            for (int c = 0; c < r; ++c) {
                acc -= lu(perm[static_cast<std::size_t>(r)], c) * y[static_cast<std::size_t>(c)];
            }
            y[static_cast<std::size_t>(r)] = acc;
        }
        for (int r = n - 1; r >= 0; --r) {
            double acc = y[static_cast<std::size_t>(r)];
            for (int c = r + 1; c < n; ++c) {
                acc -= lu(perm[static_cast<std::size_t>(r)], c) * y[static_cast<std::size_t>(c)];
            }
            y[static_cast<std::size_t>(r)] =
                acc / lu(perm[static_cast<std::size_t>(r)], r);
        }
        return y;
    }
};

inline void check_generator(const Matrix& q, int absorbing, const char* who) {
    const int n = q.rows();
    double max_diag = 0.0;
    for (int r = 0; r < n; ++r) max_diag = std::max(max_diag, std::abs(q(r, r)));
    const double tol = 1e-9 * std::max(1.0, max_diag);
    for (int r = 0; r < n; ++r) {
        double row = 0.0;
        for (int c = 0; c < n; ++c) {
            if (r != c && q(r, c) < 0.0) {
                throw std::logic_error(std::string(who) + ": negative off-diagonal rate");
            }
            row += q(r, c);
        }
        if (std::abs(row) > tol) {
            throw std::logic_error(std::string(who) + ": generator row does not sum to zero");
        }
        if (r == absorbing) {
            for (int c = 0; c < n; ++c) {
                if (q(r, c) != 0.0) {
                    throw std::logic_error(std::string(who) + ": absorbing row must be zero");
                }
            }
        }
    }
}

}  // namespace detail

// Generator of the memoryless chain. From (i,j,z): node failures at rate
// i*lambda split delta_i survivable into (i-1,j+1,z) and 1-delta_i fatal;
// detections at j*theta into (i,j-1,z+1); rebuilds at z*mu into (i+1,j,z-1).
// At i = k every failure is fatal (delta_k = 0), which also keeps i < k
// unreachable. Rows sum to zero by construction and are checked.
inline Matrix build_q(const StateSpace& space, const RateParams& rates, double eta) {
    rates.validate();
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("build_q: eta must lie in [0,1]");
    }
    const int n_states = space.size();
    const int fidx = space.total_failure_index();
    Matrix q(n_states, n_states, 0.0);
    for (int s = 0; s < n_states; ++s) {
        if (s == fidx) continue;
        const SystemState& st = space.state_at(s);
        const int i = st.available, j = st.failed, z = st.detected;
        const double fail_rate = static_cast<double>(i) * rates.lambda;
        const double d = delta(i, space.k(), eta);
        if (d > 0.0) {
            const int to = space.index_of(SystemState{.available = i - 1, .failed = j + 1,
                                                      .detected = z});
            q(s, to) += fail_rate * d;
        }
        if (d < 1.0) q(s, fidx) += fail_rate * (1.0 - d);
        if (j > 0) {
            const int to = space.index_of(SystemState{.available = i, .failed = j - 1,
                                                      .detected = z + 1});
            q(s, to) += static_cast<double>(j) * rates.theta;
        }
        if (z > 0) {
            const int to = space.index_of(SystemState{.available = i + 1, .failed = j,
                                                      .detected = z - 1});
            q(s, to) += static_cast<double>(z) * rates.mu;
        }
        double out = 0.0;
        for (int c = 0; c < n_states; ++c) {
            if (c != s) out += q(s, c);
        }
        q(s, s) = -out;
    }
    detail::check_generator(q, fidx, "build_q");
    return q;
}

// Carrier-aware snapshot generator: same structure as build_q but detection
// and rebuild rates are degraded by the per-node carrier survival
// probabilities in node_survivals (size n). Within each state the entries
// are assigned positionally: the first i play the available roles, the next
// j the undetected-failure roles, the last z the rebuilding roles. With all
// survivals at 1 this reduces to build_q for every phi.
inline Matrix build_q_timed(const StateSpace& space, const RateParams& rates, double eta,
                            std::span<const double> node_survivals) {
    rates.validate();
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("build_q_timed: eta must lie in [0,1]");
    }
    if (static_cast<int>(node_survivals.size()) != space.n()) {
        throw std::invalid_argument("build_q_timed: need one survival per node");
    }
    for (double b : node_survivals) {
        if (!(b >= 0.0 && b <= 1.0)) {
            throw std::invalid_argument("build_q_timed: survivals must lie in [0,1]");
        }
    }
    const int n_states = space.size();
    const int fidx = space.total_failure_index();
    Matrix q(n_states, n_states, 0.0);
    std::vector<double> avail, failed, detected;
    for (int s = 0; s < n_states; ++s) {
        if (s == fidx) continue;
        const SystemState& st = space.state_at(s);
        const int i = st.available, j = st.failed, z = st.detected;
        avail.assign(node_survivals.begin(), node_survivals.begin() + i);
        failed.assign(node_survivals.begin() + i, node_survivals.begin() + i + j);
        detected.assign(node_survivals.begin() + i + j, node_survivals.end());
        const double fail_rate = static_cast<double>(i) * rates.lambda;
        const double d = delta(i, space.k(), eta);
        if (d > 0.0) {
            const int to = space.index_of(SystemState{.available = i - 1, .failed = j + 1,
                                                      .detected = z});
            q(s, to) += fail_rate * d;
        }
        if (d < 1.0) q(s, fidx) += fail_rate * (1.0 - d);
        if (j > 0) {
            const int to = space.index_of(SystemState{.available = i, .failed = j - 1,
                                                      .detected = z + 1});
            q(s, to) += detection_rate(j, rates.phi, rates.theta, failed);
        }
        if (z > 0) {
            const int to = space.index_of(SystemState{.available = i + 1, .failed = j,
                                                      .detected = z - 1});
            q(s, to) += repair_rate(i, z, space.k(), rates.phi, rates.mu, avail, detected);
        }
        double out = 0.0;
        for (int c = 0; c < n_states; ++c) {
            if (c != s) out += q(s, c);
        }
        q(s, s) = -out;
    }
    detail::check_generator(q, fidx, "build_q_timed");
    return q;
}

// Jump-chain transition matrix: for transient rows p_sc = q_sc / |q_ss| off
// the diagonal and 0 on it; the absorbing row is a unit self-loop. Rows sum
// to one and are checked.
inline Matrix q_to_p(const Matrix& q) {
    const int n = q.rows();
    if (q.cols() != n) throw std::invalid_argument("q_to_p: generator must be square");
    Matrix p(n, n, 0.0);
    for (int r = 0; r < n; ++r) {
        const double diag = q(r, r);
        if (diag == 0.0) {
            p(r, r) = 1.0;
            continue;
        }
        if (!(diag < 0.0)) throw std::invalid_argument("q_to_p: positive diagonal entry");
        for (int c = 0; c < n; ++c) {
            if (c != r) p(r, c) = q(r, c) / -diag;
        }
    }
    for (int r = 0; r < n; ++r) {
        double row = 0.0;
        for (int c = 0; c < n; ++c) row += p(r, c);
        if (std::abs(row - 1.0) > 1e-9) {
            throw std::logic_error("q_to_p: row does not sum to one");
        }
    }
    return p;
}

// Fundamental matrix M = (I - L)^{-1} of an absorbing jump chain whose final
// row is the absorbing state; L is the transient-to-transient block. M(s,c)
// is the expected visit count to c starting from s.
inline Matrix fundamental_matrix(const Matrix& p) {
    const int n = p.rows();
    if (p.cols() != n || n < 2) {
        throw std::invalid_argument("fundamental_matrix: need a square chain with >= 2 states");
    }
    const int t = n - 1;
    Matrix i_minus_l(t, t, 0.0);
    for (int r = 0; r < t; ++r) {
        for (int c = 0; c < t; ++c) {
            i_minus_l(r, c) = (r == c ? 1.0 : 0.0) - p(r, c);
        }
    }
    const detail::Lu lu(std::move(i_minus_l));
    Matrix m(t, t, 0.0);
    std::vector<double> unit(static_cast<std::size_t>(t), 0.0);
    for (int c = 0; c < t; ++c) {
        unit[static_cast<std::size_t>(c)] = 1.0;
        const auto col = lu.solve(unit);
        unit[static_cast<std::size_t>(c)] = 0.0;
        for (int r = 0; r < t; ++r) m(r, c) = col[static_cast<std::size_t>(r)];
    }
    return m;
}

// Expected hours to absorption from each transient state: solve
// (-Q_TT) T = 1 on the transient block.
inline std::vector<double> mean_absorption_times(const Matrix& q) {
    const int n = q.rows();
    if (q.cols() != n || n < 2) {
        throw std::invalid_argument("mean_absorption_times: need a square generator with >= 2 states");
    }
    const int t = n - 1;
    Matrix neg_qtt(t, t, 0.0);
    for (int r = 0; r < t; ++r) {
        for (int c = 0; c < t; ++c) neg_qtt(r, c) = -q(r, c);
    }
    const detail::Lu lu(std::move(neg_qtt));
    const std::vector<double> ones(static_cast<std::size_t>(t), 1.0);
    return lu.solve(ones);
}

struct UpperBounds {
    double fundamental = 0.0;   // sum over visits weighted by mean holding times
    double linear_solve = 0.0;  // direct first-passage solve, reference route
};

// Mean time to data loss of the memoryless chain from the all-available
// state, by two independent routes that must agree.
inline UpperBounds upper_bound(const StateSpace& space, const RateParams& rates, double eta) {
    const Matrix q = build_q(space, rates, eta);
    const auto times = mean_absorption_times(q);
    UpperBounds ub;
    ub.linear_solve = times[0];
    const Matrix p = q_to_p(q);
    const Matrix m = fundamental_matrix(p);
    double acc = 0.0;
    for (int c = 0; c < m.cols(); ++c) {
        acc += m(0, c) / -q(c, c);
    }
    ub.fundamental = acc;
    return ub;
}

enum class LowerBoundMode { exact, approx };

namespace detail {

// Harmonic sum with the small-argument range exact and the asymptotic
// expansion above it, so the approximate bound stays within 1e-4 of the
// exact one even when the arguments are tiny.
inline double harmonic_hybrid(int x) {
    if (x <= 0) return 0.0;
    if (x <= 4) return harmonic_sum(static_cast<std::uint64_t>(x), HarmonicMode::exact);
    return harmonic_sum(static_cast<std::uint64_t>(x), HarmonicMode::approx);
}

}  // namespace detail

// Pessimistic closed form: detection and rebuild are ignored, so nodes only
// fail. Conditioning on the first fatal failure happening at population i
// gives sum_{i=k}^{n} (1 - delta_i) prod_{j=i+1}^{n} delta_j *
// (H(n) - H(i-1)) / lambda. The approx mode only changes how the harmonic
// sums are evaluated.
inline double lower_bound(int n, int k, double lambda, double eta,
                          LowerBoundMode mode = LowerBoundMode::exact) {
    detail::check_nk(n, k, "lower_bound");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lower_bound: lambda must be positive and finite");
    }
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("lower_bound: eta must lie in [0,1]");
    }
    const auto hsum = [&](int x) {
        if (mode == LowerBoundMode::exact) return detail::harmonic_or_zero(x);
        return detail::harmonic_hybrid(x);
    };
    double acc = 0.0;
    double tail_prod = 1.0;  // prod_{j=i+1}^{n} delta_j, built downward from i = n
    for (int i = n; i >= k; --i) {
        const double di = delta(i, k, eta);
        acc += (1.0 - di) * tail_prod * (hsum(n) - hsum(i - 1)) / lambda;
        tail_prod *= di;
        if (tail_prod == 0.0) break;
    }
    return acc;
}

}  // namespace coldsim
