#pragma once

// Event-driven Monte Carlo over node lifecycles with aging carriers.
// Exponential stages race per epoch; carrier deaths are absolutely
// scheduled (the budget's last exchange is a gamma arrival time, no
// per-exchange simulation). Trials are reproducible and worker-count
// independent: trial t always consumes its own substream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "coldsim/carrier.hpp"
#include "coldsim/hard_error.hpp"
#include "coldsim/state_space.hpp"

namespace coldsim {

enum class SimMode { exact, approx };

struct SimConfig {
    int n = 0;
    int k = 0;
    RateParams rates;
    HardErrorParams hard_error;
    WeibullParams weibull;
    SimMode mode = SimMode::exact;
    std::int64_t trials = 10000;
    double max_sim_hours = 1e9;
    std::uint64_t seed = 12345;
    int workers = 0;  // 0 = all hardware threads

    void validate() const {
        detail::check_nk(n, k, "SimConfig");
        if (n > kDefaultMaxNodes) {
            throw std::invalid_argument("SimConfig: n exceeds the supported maximum");
        }
        rates.validate();
        if (rates.omega > 0.0) check_weibull(weibull, "SimConfig");
        if (trials < 1) throw std::invalid_argument("SimConfig: trials must be >= 1");
        if (!(max_sim_hours > 0.0)) {
            throw std::invalid_argument("SimConfig: max_sim_hours must be positive");
        }
        if (workers < 0) throw std::invalid_argument("SimConfig: workers must be >= 0");
    }
};

struct TrialOutcome {
    double time_to_data_loss = 0.0;
    double time_to_first_unavailability = 0.0;
    bool data_loss_censored = false;
    bool unavailability_censored = false;
    std::uint64_t total_exchanges = 0;
    std::uint32_t carrier_failures = 0;
    std::uint32_t node_failures = 0;
};

struct Estimate {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stderr_mean = std::numeric_limits<double>::quiet_NaN();
    std::int64_t count = 0;  // trials behind the estimate
};

struct SimSummary {
    Estimate mttdl;
    Estimate mttdu;
    double censored_fraction = 0.0;
    std::int64_t trials = 0;
    std::vector<TrialOutcome> outcomes;
};

namespace detail {

// SplitMix64 stream: trial t draws the t-th output, so trial substreams do
// not depend on how trials are sharded across workers.
inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + (index + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double exponential_draw(std::mt19937_64& rng, double rate) {
    return -std::log(uniform01(rng)) / rate;
}

enum class NodeStage : std::uint8_t { available, failed, detected };

struct NodeSim {
    NodeStage stage = NodeStage::available;
    bool carrier_operational = true;
    std::int64_t budget = 0;        // exchanges until the fatal bit flip
    double fresh_time = 0.0;        // when the current budget started
    double death_time = 0.0;        // absolute; +inf when omega = 0
    std::vector<int> helpers;       // rebuild sources; exact mode only
};

class TrialEngine {
  public:
    TrialEngine(const SimConfig& cfg, std::mt19937_64& rng)
        : cfg_(cfg), rng_(rng), nodes_(static_cast<std::size_t>(cfg.n)) {
        for (auto& nd : nodes_) refresh_carrier(nd, 0.0);
    }

    TrialOutcome run() {
        const double horizon = cfg_.max_sim_hours;
        double t = 0.0;
        while (true) {
            fix_helper_sets();
            const Rates r = current_rates(t);
            const double total = r.fail + r.detect + r.repair + r.carrier_repair;
            double next_death = std::numeric_limits<double>::infinity();
            int death_node = -1;
            for (int v = 0; v < cfg_.n; ++v) {
                const auto& nd = nodes_[static_cast<std::size_t>(v)];
                if (nd.carrier_operational && nd.death_time < next_death) {
                    next_death = nd.death_time;
                    death_node = v;
                }
            }
            double t_next = std::numeric_limits<double>::infinity();
            if (total > 0.0) t_next = t + exponential_draw(rng_, total);
            if (next_death < t_next) {
                if (next_death >= horizon) break;
                t = next_death;
                on_carrier_death(death_node, t);
                check_unavailability(t);
                continue;
            }
            if (t_next >= horizon) break;
            t = t_next;
            if (!apply_exponential_event(t, r, total)) {
                // Absorbed: total failure at time t.
                out_.time_to_data_loss = t;
                if (!ttdu_set_) {
                    out_.time_to_first_unavailability = t;
                    ttdu_set_ = true;
                }
                finish_exchange_tally(t);
                return out_;
            }
            check_unavailability(t);
        }
        out_.time_to_data_loss = horizon;
        out_.data_loss_censored = true;
        if (!ttdu_set_) {
            out_.time_to_first_unavailability = horizon;
            out_.unavailability_censored = true;
        }
        finish_exchange_tally(horizon);
        return out_;
    }

  private:
    struct Rates {
        double fail = 0.0;
        double detect = 0.0;
        double repair = 0.0;
        double carrier_repair = 0.0;
        // Per-node gate flags, exact mode: which nodes back each category.
        std::vector<int> detect_nodes;
        std::vector<int> repair_nodes;
    };

    void refresh_carrier(NodeSim& nd, double now) {
        nd.carrier_operational = true;
        nd.fresh_time = now;
        if (cfg_.rates.omega > 0.0) {
            nd.budget = sample_sbf(cfg_.weibull, rng_);
            std::gamma_distribution<double> g(static_cast<double>(nd.budget),
                                              1.0 / cfg_.rates.omega);
            nd.death_time = now + g(rng_);
        } else {
            nd.budget = 0;
            nd.death_time = std::numeric_limits<double>::infinity();
        }
    }

    void on_carrier_death(int v, double now) {
        auto& nd = nodes_[static_cast<std::size_t>(v)];
        out_.total_exchanges += static_cast<std::uint64_t>(nd.budget);
        out_.carrier_failures += 1;
        if (cfg_.rates.instant_carrier_repair()) {
            refresh_carrier(nd, now);
        } else {
            nd.carrier_operational = false;
        }
    }

    // Exact mode keeps a live set of k rebuild sources per detected node,
    // drawn at detection and redrawn only when a member leaves the
    // available stage.
    void fix_helper_sets() {
        if (cfg_.mode != SimMode::exact) return;
        for (int v = 0; v < cfg_.n; ++v) {
            auto& nd = nodes_[static_cast<std::size_t>(v)];
            if (nd.stage != NodeStage::detected) continue;
            bool valid = nd.helpers.size() == static_cast<std::size_t>(cfg_.k);
            for (int h : nd.helpers) {
                if (nodes_[static_cast<std::size_t>(h)].stage != NodeStage::available) {
                    valid = false;
                    break;
                }
            }
            if (!valid) draw_helpers(nd);
        }
    }

    void draw_helpers(NodeSim& nd) {
        std::vector<int> pool;
        for (int u = 0; u < cfg_.n; ++u) {
            if (nodes_[static_cast<std::size_t>(u)].stage == NodeStage::available) {
                pool.push_back(u);
            }
        }
        // i >= k holds on every reachable state, so the pool is never short.
        nd.helpers.clear();
        for (int need = cfg_.k; need > 0; --need) {
            const std::size_t pick = static_cast<std::size_t>(
                uniform01(rng_) * static_cast<double>(pool.size()));
            const std::size_t at = std::min(pick, pool.size() - 1);
            nd.helpers.push_back(pool[at]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
        }
    }

    bool helpers_ready(const NodeSim& nd) const {
        for (int h : nd.helpers) {
            const auto& hn = nodes_[static_cast<std::size_t>(h)];
            if (hn.stage != NodeStage::available || !hn.carrier_operational) return false;
        }
        return true;
    }

    Rates current_rates(double now) {
        Rates r;
        int i = 0, j = 0, z = 0, dead = 0;
        for (const auto& nd : nodes_) {
            switch (nd.stage) {
                case NodeStage::available: ++i; break;
                case NodeStage::failed: ++j; break;
                case NodeStage::detected: ++z; break;
            }
            if (!nd.carrier_operational) ++dead;
        }
        r.fail = static_cast<double>(i) * cfg_.rates.lambda;
        if (!cfg_.rates.instant_carrier_repair()) {
            r.carrier_repair = static_cast<double>(dead) * cfg_.rates.phi;
        }
        if (cfg_.mode == SimMode::exact) {
            for (int v = 0; v < cfg_.n; ++v) {
                const auto& nd = nodes_[static_cast<std::size_t>(v)];
                if (nd.stage == NodeStage::failed && nd.carrier_operational) {
                    r.detect_nodes.push_back(v);
                } else if (nd.stage == NodeStage::detected && nd.carrier_operational &&
                           helpers_ready(nd)) {
                    r.repair_nodes.push_back(v);
                }
            }
            r.detect = static_cast<double>(r.detect_nodes.size()) * cfg_.rates.theta;
            r.repair = static_cast<double>(r.repair_nodes.size()) * cfg_.rates.mu;
        } else {
            // Aggregate carrier-aware rates, frozen until the next event.
            std::vector<double> beta_avail, beta_failed, beta_detected;
            for (int v = 0; v < cfg_.n; ++v) {
                const auto& nd = nodes_[static_cast<std::size_t>(v)];
                double beta = 0.0;
                if (nd.carrier_operational) {
                    beta = (cfg_.rates.omega > 0.0)
                               ? carrier_survival(static_cast<double>(nd.budget),
                                                  cfg_.rates.omega, now - nd.fresh_time)
                               : 1.0;
                }
                switch (nd.stage) {
                    case NodeStage::available:
                        beta_avail.push_back(beta);
                        break;
                    case NodeStage::failed:
                        beta_failed.push_back(beta);
                        r.detect_nodes.push_back(v);
                        break;
                    case NodeStage::detected:
                        beta_detected.push_back(beta);
                        r.repair_nodes.push_back(v);
                        break;
                }
            }
            if (j > 0) {
                r.detect = detection_rate(j, cfg_.rates.phi, cfg_.rates.theta, beta_failed);
            }
            if (z > 0) {
                r.repair = repair_rate(i, z, cfg_.k, cfg_.rates.phi, cfg_.rates.mu,
                                       beta_avail, beta_detected);
            }
        }
        return r;
    }

    // Returns false when the event absorbs the chain.
    bool apply_exponential_event(double now, const Rates& r, double total) {
        double pick = uniform01(rng_) * total;
        if (pick < r.fail) {
            return apply_node_failure();
        }
        pick -= r.fail;
        if (pick < r.detect) {
            const auto& cands = r.detect_nodes;
            const int v = cands[std::min<std::size_t>(
                static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(cands.size())),
                cands.size() - 1)];
            auto& nd = nodes_[static_cast<std::size_t>(v)];
            nd.stage = NodeStage::detected;
            if (cfg_.mode == SimMode::exact) draw_helpers(nd);
            return true;
        }
        pick -= r.detect;
        if (pick < r.repair) {
            const auto& cands = r.repair_nodes;
            const int v = cands[std::min<std::size_t>(
                static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(cands.size())),
                cands.size() - 1)];
            auto& nd = nodes_[static_cast<std::size_t>(v)];
            nd.stage = NodeStage::available;
            nd.helpers.clear();
            return true;
        }
        // Carrier replacement completes on one dead carrier.
        std::vector<int> dead;
        for (int v = 0; v < cfg_.n; ++v) {
            if (!nodes_[static_cast<std::size_t>(v)].carrier_operational) dead.push_back(v);
        }
        const int v = dead[std::min<std::size_t>(
            static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(dead.size())),
            dead.size() - 1)];
        refresh_carrier(nodes_[static_cast<std::size_t>(v)], now);
        return true;
    }

    bool apply_node_failure() {
        std::vector<int> avail;
        for (int v = 0; v < cfg_.n; ++v) {
            if (nodes_[static_cast<std::size_t>(v)].stage == NodeStage::available) {
                avail.push_back(v);
            }
        }
        const int i = static_cast<int>(avail.size());
        const int v = avail[std::min<std::size_t>(
            static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(avail.size())),
            avail.size() - 1)];
        out_.node_failures += 1;
        const double surv = delta(i, cfg_.k, cfg_.hard_error.eta);
        if (uniform01(rng_) >= surv) return false;
        nodes_[static_cast<std::size_t>(v)].stage = NodeStage::failed;
        nodes_[static_cast<std::size_t>(v)].helpers.clear();
        return true;
    }

    void check_unavailability(double now) {
        if (ttdu_set_) return;
        int usable = 0;
        for (const auto& nd : nodes_) {
            if (nd.stage == NodeStage::available && nd.carrier_operational) ++usable;
        }
        if (usable < cfg_.k) {
            out_.time_to_first_unavailability = now;
            ttdu_set_ = true;
        }
    }

    // Live carriers contribute their exchanges so far, estimated from the
    // elapsed age, capped below the budget that would have killed them.
    void finish_exchange_tally(double t_end) {
        if (cfg_.rates.omega == 0.0) return;
        for (const auto& nd : nodes_) {
            if (!nd.carrier_operational) continue;
            const double age = std::max(0.0, t_end - nd.fresh_time);
            const auto made = static_cast<std::int64_t>(cfg_.rates.omega * age);
            out_.total_exchanges +=
                static_cast<std::uint64_t>(std::clamp<std::int64_t>(made, 0, nd.budget - 1));
        }
    }

    const SimConfig& cfg_;
    std::mt19937_64& rng_;
    std::vector<NodeSim> nodes_;
    TrialOutcome out_;
    bool ttdu_set_ = false;
};

}  // namespace detail

inline TrialOutcome run_trial_exact(const SimConfig& cfg, std::mt19937_64& rng) {
    if (cfg.mode != SimMode::exact) {
        throw std::invalid_argument("run_trial_exact: config mode must be exact");
    }
    detail::TrialEngine eng(cfg, rng);
    return eng.run();
}

inline TrialOutcome run_trial_approx(const SimConfig& cfg, std::mt19937_64& rng) {
    if (cfg.mode != SimMode::approx) {
        throw std::invalid_argument("run_trial_approx: config mode must be approx");
    }
    detail::TrialEngine eng(cfg, rng);
    return eng.run();
}

namespace detail {

inline Estimate estimate_from(const std::vector<double>& xs) {
    Estimate e;
    e.count = static_cast<std::int64_t>(xs.size());
    if (xs.empty()) return e;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    e.mean = mean;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double var = ss / static_cast<double>(xs.size() - 1);
        e.stderr_mean = std::sqrt(var / static_cast<double>(xs.size()));
    } else {
        e.stderr_mean = 0.0;
    }
    return e;
}

}  // namespace detail

// Runs cfg.trials independent trials, sharded over workers. Trial t is
// seeded from substream t of the config seed, so results are bitwise
// identical for any worker count.
inline SimSummary run_batch(const SimConfig& cfg) {
    cfg.validate();
    const std::int64_t trials = cfg.trials;
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const int workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(hw);
    const int used = static_cast<int>(
        std::min<std::int64_t>(trials, static_cast<std::int64_t>(workers)));

    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run_range = [&](std::int64_t lo, std::int64_t hi) {
        try {
            for (std::int64_t t = lo; t < hi; ++t) {
                std::mt19937_64 rng(detail::splitmix64_at(cfg.seed,
                                                          static_cast<std::uint64_t>(t)));
                detail::TrialEngine eng(cfg, rng);
                outcomes[static_cast<std::size_t>(t)] = eng.run();
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (used <= 1) {
        run_range(0, trials);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(used));
        const std::int64_t per = (trials + used - 1) / used;
        for (int w = 0; w < used; ++w) {
            const std::int64_t lo = static_cast<std::int64_t>(w) * per;
            const std::int64_t hi = std::min(trials, lo + per);
            if (lo >= hi) break;
            pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // Censored trials keep their horizon value in the mean; the censored
    // fraction is reported so callers can judge the bias.
    std::vector<double> ttdl, ttdu;
    std::int64_t censored = 0;
    for (const auto& o : outcomes) {
        if (o.data_loss_censored) ++censored;
        ttdl.push_back(o.time_to_data_loss);
        ttdu.push_back(o.time_to_first_unavailability);
    }
    SimSummary s;
    s.trials = trials;
    s.censored_fraction = static_cast<double>(censored) / static_cast<double>(trials);
    s.mttdl = detail::estimate_from(ttdl);
    s.mttdu = detail::estimate_from(ttdu);
    s.outcomes = std::move(outcomes);
    return s;
}

enum class SweepAxis { exchange_rate, carrier_repair_rate };

struct SweepPoint {
    double axis_value = 0.0;
    SimSummary summary;
};

// One run_batch per grid value, all from the same base seed. The axis value
// replaces omega or phi in the copied config.
inline std::vector<SweepPoint> sweep(const SimConfig& base, SweepAxis axis,
                                     std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("sweep: grid must be non-empty");
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (!(grid[g] > grid[g - 1])) {
            throw std::invalid_argument("sweep: grid must be strictly increasing");
        }
    }
    std::vector<SweepPoint> points;
    points.reserve(grid.size());
    for (double v : grid) {
        SimConfig cfg = base;
        switch (axis) {
            case SweepAxis::exchange_rate:
                if (!(v >= 0.0) || !std::isfinite(v)) {
                    throw std::invalid_argument("sweep: exchange rate values must be >= 0");
                }
                cfg.rates.omega = v;
                break;
            case SweepAxis::carrier_repair_rate:
                if (!(v > 0.0)) {
                    throw std::invalid_argument("sweep: carrier repair rate values must be > 0");
                }
                cfg.rates.phi = v;
                break;
        }
        points.push_back(SweepPoint{.axis_value = v, .summary = run_batch(cfg)});
    }
    return points;
}

}  // namespace coldsim
