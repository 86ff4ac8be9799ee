// coldsim: reliability and availability modeling of carrier-assisted cold
// storage. Subcommands cover state-space inspection, carrier lifetime
// fitting, analytic bounds, Monte Carlo simulation, and parameter sweeps.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coldsim/config.hpp"
#include "coldsim/markov.hpp"
#include "coldsim/simulate.hpp"
#include "coldsim/state_space.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// COLDSIM_SEED beats the config file so sweeps can be re-seeded without
// editing configs.
void apply_seed_override(coldsim::SimConfig& cfg) {
    const char* env = std::getenv("COLDSIM_SEED");
    if (env == nullptr || *env == '\0') return;
    std::uint64_t seed = 0;
    const std::string s(env);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw coldsim::ConfigError("COLDSIM_SEED must be a nonnegative integer, got \"" +
                                   s + "\"");
    }
    cfg.seed = seed;
}

int cmd_states(int n, int k, int s) {
    if (s == 3) {
        const coldsim::StateSpace space(n, k);
        std::cout << "index,i,j,z,is_failure\n";
        for (int idx = 0; idx < space.size(); ++idx) {
            const auto& st = space.state_at(idx);
            std::cout << idx << ',' << st.available << ',' << st.failed << ','
                      << st.detected << ',' << (st.total_failure ? 1 : 0) << '\n';
        }
        return 0;
    }
    const auto count = coldsim::count_states(n, k, s);
    const auto bounds = coldsim::count_bounds(n, k, s);
    std::cout << "n,k,s,count_states,count_lower,count_upper\n";
    std::cout << n << ',' << k << ',' << s << ',' << count << ',' << bounds.lower << ','
              << bounds.upper << '\n';
    return 0;
}

int cmd_fit(const std::string& input, const std::string& output) {
    coldsim::IngestStats stats;
    const auto samples = coldsim::ingest_exchange_log(input, &stats);
    std::cerr << "ingested " << stats.count << " exchange counts (min " << fmt(stats.min)
              << ", max " << fmt(stats.max) << ", mean " << fmt(stats.mean) << ")\n";
    const auto params = coldsim::fit_weibull(samples);
    json out;
    out["shape"] = params.shape;
    out["scale"] = params.scale;
    out["mean_exchanges"] = coldsim::mean_exchanges(params);
    out["n_samples"] = params.fit->n_samples;
    out["r_squared"] = params.fit->r_squared;
    std::ofstream os(output);
    if (!os) throw std::runtime_error("cannot open output file: " + output);
    os << out.dump(2) << '\n';
    if (!os.good()) throw std::runtime_error("write failed: " + output);
    std::cerr << "fit written to " << output << "\n";
    return 0;
}

int cmd_bounds(const std::string& config_path) {
    const auto file_cfg = coldsim::parse_config(config_path);
    const auto cfg = file_cfg.to_sim_config();
    const coldsim::StateSpace space(cfg.n, cfg.k);
    const auto ub = coldsim::upper_bound(space, cfg.rates, cfg.hard_error.eta);
    json out;
    out["n"] = cfg.n;
    out["k"] = cfg.k;
    out["state_count"] = space.size();
    out["epsilon"] = cfg.hard_error.epsilon;
    out["eta"] = cfg.hard_error.eta;
    out["lower_bound_hours"]["exact"] = coldsim::lower_bound(
        cfg.n, cfg.k, cfg.rates.lambda, cfg.hard_error.eta, coldsim::LowerBoundMode::exact);
    out["lower_bound_hours"]["approx"] = coldsim::lower_bound(
        cfg.n, cfg.k, cfg.rates.lambda, cfg.hard_error.eta, coldsim::LowerBoundMode::approx);
    out["upper_bound_hours"]["fundamental"] = ub.fundamental;
    out["upper_bound_hours"]["linear_solve"] = ub.linear_solve;
    std::cout << out.dump(2) << '\n';
    return 0;
}

void write_trials_csv(const coldsim::SimSummary& summary, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    os << "trial,ttdl_hours,ttdu_hours,censored,exchanges,carrier_failures,node_failures\n";
    for (std::size_t t = 0; t < summary.outcomes.size(); ++t) {
        const auto& o = summary.outcomes[t];
        os << t << ',' << fmt(o.time_to_data_loss) << ','
           << fmt(o.time_to_first_unavailability) << ',' << (o.data_loss_censored ? 1 : 0)
           << ',' << o.total_exchanges << ',' << o.carrier_failures << ','
           << o.node_failures << '\n';
    }
    if (!os.good()) throw std::runtime_error("write failed: " + path);
}

void warn_censoring(const coldsim::SimSummary& summary) {
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.2f", summary.censored_fraction * 100.0);
    if (summary.censored_fraction > 0.5) {
        std::cerr << "warning: " << pct
                  << "% of trials hit the horizon; means are unreliable\n";
    } else if (summary.censored_fraction > 0.01) {
        std::cerr << "warning: " << pct << "% of trials were censored at the horizon\n";
    }
}

json summary_json(const coldsim::SimSummary& summary, const coldsim::SimConfig& cfg) {
    json out;
    out["mode"] = cfg.mode == coldsim::SimMode::exact ? "exact" : "approx";
    out["trials"] = summary.trials;
    out["seed"] = cfg.seed;
    out["mttdl_hours"] = summary.mttdl.mean;
    out["mttdl_stderr"] = summary.mttdl.stderr_mean;
    out["mttdu_hours"] = summary.mttdu.mean;
    out["mttdu_stderr"] = summary.mttdu.stderr_mean;
    out["censored_fraction"] = summary.censored_fraction;
    return out;
}

int cmd_simulate(const std::string& config_path, const std::string& trials_csv) {
    const auto file_cfg = coldsim::parse_config(config_path);
    auto cfg = file_cfg.to_sim_config();
    apply_seed_override(cfg);
    const auto summary = coldsim::run_batch(cfg);
    warn_censoring(summary);
    if (!trials_csv.empty()) write_trials_csv(summary, trials_csv);
    std::cout << summary_json(summary, cfg).dump(2) << '\n';
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis_name,
              const std::string& grid_csv, const std::string& output) {
    const auto file_cfg = coldsim::parse_config(config_path);
    auto cfg = file_cfg.to_sim_config();
    apply_seed_override(cfg);

    coldsim::SweepAxis axis;
    if (axis_name == "exchange_rate") {
        axis = coldsim::SweepAxis::exchange_rate;
    } else if (axis_name == "carrier_repair_rate") {
        axis = coldsim::SweepAxis::carrier_repair_rate;
    } else {
        throw coldsim::ConfigError(
            "--axis expects exchange_rate or carrier_repair_rate, got \"" + axis_name + "\"");
    }

    std::vector<double> grid;
    std::size_t start = 0;
    while (start <= grid_csv.size()) {
        std::size_t comma = grid_csv.find(',', start);
        if (comma == std::string::npos) comma = grid_csv.size();
        const std::string cell = grid_csv.substr(start, comma - start);
        start = comma + 1;
        if (cell.empty()) continue;
        try {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            if (used != cell.size()) throw std::invalid_argument("trailing characters");
            grid.push_back(v);
        } catch (const std::exception&) {
            throw coldsim::ConfigError("--grid entry is not a number: \"" + cell + "\"");
        }
    }
    if (grid.empty()) throw coldsim::ConfigError("--grid must list at least one value");
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (!(grid[g] > grid[g - 1])) {
            throw coldsim::ConfigError("--grid must be strictly increasing");
        }
    }

    const coldsim::StateSpace space(cfg.n, cfg.k);
    const double lb = coldsim::lower_bound(cfg.n, cfg.k, cfg.rates.lambda,
                                           cfg.hard_error.eta, coldsim::LowerBoundMode::exact);
    const double ub = coldsim::upper_bound(space, cfg.rates, cfg.hard_error.eta).linear_solve;
    const auto points = coldsim::sweep(cfg, axis, grid);
    for (const auto& p : points) warn_censoring(p.summary);
    coldsim::emit_sweep_csv(points, lb, ub, output);
    std::cerr << "sweep written to " << output << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carrier-assisted cold storage reliability modeling"};
    app.require_subcommand(1);

    int n = 0, k = 0, s = 3;
    auto* states = app.add_subcommand("states", "enumerate or count the recovery chain");
    states->add_option("--n", n, "total nodes")->required();
    states->add_option("--k", k, "nodes required for retrieval")->required();
    states->add_option("--s", s, "lifecycle stages per node (3 enumerates)");

    std::string fit_input, fit_output;
    auto* fit = app.add_subcommand("fit", "fit carrier lifetimes from an exchange log");
    fit->add_option("--input", fit_input, "exchange log (CSV or one count per line)")
        ->required();
    fit->add_option("--output", fit_output, "JSON output path")->required();

    std::string bounds_config;
    auto* bounds = app.add_subcommand("bounds", "analytic reliability bounds");
    bounds->add_option("--config", bounds_config, "config file")->required();

    std::string sim_config, trials_csv;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo MTTDL/MTTDU estimation");
    simulate->add_option("--config", sim_config, "config file")->required();
    simulate->add_option("--trials-csv", trials_csv, "per-trial outcome CSV path");

    std::string sweep_config, sweep_axis, sweep_grid, sweep_output;
    auto* sweep = app.add_subcommand("sweep", "simulate across a parameter grid");
    sweep->add_option("--config", sweep_config, "config file")->required();
    sweep->add_option("--axis", sweep_axis, "exchange_rate or carrier_repair_rate")
        ->required();
    sweep->add_option("--grid", sweep_grid, "comma-separated increasing values")->required();
    sweep->add_option("--output", sweep_output, "CSV output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (states->parsed()) return cmd_states(n, k, s);
        if (fit->parsed()) return cmd_fit(fit_input, fit_output);
        if (bounds->parsed()) return cmd_bounds(bounds_config);
        if (simulate->parsed()) return cmd_simulate(sim_config, trials_csv);
        if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_axis, sweep_grid,
                                              sweep_output);
    } catch (const coldsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const coldsim::IngestError& e) {
        std::cerr << "ingest error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
