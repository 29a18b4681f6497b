// Experiment CLI: scenario generation, single solves, parameter sweeps, and
// the brute-force oracle. All outputs are deterministic for fixed inputs.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wptisac/oracle.hpp"
#include "wptisac/scenario.hpp"
#include "wptisac/sensing.hpp"
#include "wptisac/solver.hpp"

namespace {

using nlohmann::json;
using namespace wptisac;

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("WPT_ISAC_LOG");
        return env ? std::atoi(env) : 0;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[wpt-isac] " << msg << "\n";
}

struct Options {
    std::uint64_t seed = 7;
    bool seed_set = false;
    std::string scenario_path;
    std::string config_path;
    std::vector<std::string> sets;  // key=value overrides
    std::string scheme = "proposed";
    std::string sweep_axis;
    std::vector<double> sweep_values;
    std::string out_path;
    std::string format = "csv";
    int jobs = 0;
    int max_outer_iters = -1;
    double lambda_th = -1.0;
    int oracle_points = 64;
    int oracle_stages = 25;
};

// Flat dotted-key configuration: params.*, solver.*, seed. Later sources win.
void apply_kv(const std::string& key, const std::string& value, SystemParams& params,
              SolverConfig& solver, std::uint64_t& seed) {
    auto as_double = [&] { return std::stod(value); };
    auto as_int = [&] { return std::stoi(value); };
    if (key == "seed") seed = std::stoull(value);
    else if (key == "params.num_users" || key == "params.M") params.num_users = as_int();
    else if (key == "params.num_targets" || key == "params.N") params.num_targets = as_int();
    else if (key == "params.p0") params.p0 = as_double();
    else if (key == "params.p_max") params.p_max = as_double();
    else if (key == "params.t_max") params.t_max = as_double();
    else if (key == "params.sigma2") params.sigma2 = as_double();
    else if (key == "params.bandwidth") params.bandwidth = as_double();
    else if (key == "params.eta") params.eta = as_double();
    else if (key == "params.zeta") params.zeta.assign(1, as_double());  // broadcast later
    else if (key == "params.kappa") params.kappa = as_double();
    else if (key == "params.nu") params.nu = as_double();
    else if (key == "params.c") params.c = as_double();
    else if (key == "params.deploy_radius") params.deploy_radius = as_double();
    else if (key == "params.lambda_th") params.lambda_th = as_double();
    else if (key == "solver.max_outer_iters") solver.max_outer_iters = as_int();
    else if (key == "solver.t0_floor") solver.t0_floor = as_double();
    else if (key == "solver.gap_target") solver.gap_target = as_double();
    else throw std::invalid_argument("unknown configuration key: " + key);
}

void apply_config_sources(const Options& opt, SystemParams& params, SolverConfig& solver,
                          std::uint64_t& seed) {
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) throw std::runtime_error("cannot read config file: " + opt.config_path);
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (!key.empty()) apply_kv(key, value, params, solver, seed);
        }
    }
    for (const auto& kv : opt.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value: " + kv);
        apply_kv(kv.substr(0, eq), kv.substr(eq + 1), params, solver, seed);
    }
    // Dedicated flags win over config/--set; the solver adopts the instance's
    // stated SCA threshold unless the flag overrides it.
    if (opt.seed_set) seed = opt.seed;
    if (opt.max_outer_iters > 0) solver.max_outer_iters = opt.max_outer_iters;
    solver.lambda_th = params.lambda_th;
    if (opt.lambda_th > 0) solver.lambda_th = opt.lambda_th;

    if (params.zeta.size() == 1 && params.num_users > 1)
        params.zeta.assign(static_cast<std::size_t>(params.num_users), params.zeta[0]);
    params.normalize_and_validate();
}

Scenario load_scenario(const Options& opt) {
    SystemParams params;
    SolverConfig solver;
    std::uint64_t seed = opt.seed;
    if (!opt.scenario_path.empty()) {
        std::ifstream in(opt.scenario_path);
        if (!in) throw std::runtime_error("cannot read scenario file: " + opt.scenario_path);
        json j;
        in >> j;
        return j.get<Scenario>();
    }
    apply_config_sources(opt, params, solver, seed);
    return generate_scenario(seed, params);
}

SolverConfig load_solver_config(const Options& opt) {
    SystemParams params;
    SolverConfig solver;
    std::uint64_t seed = opt.seed;
    apply_config_sources(opt, params, solver, seed);
    return solver;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    out << content;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

SolveReport run_scheme(const std::string& scheme, const Scenario& sc, const SolverConfig& cfg) {
    if (scheme == "proposed") return sca_solve(sc, cfg);
    if (scheme == "equal-time") return solve_equal_time(sc, cfg);
    if (scheme == "max-power") return solve_max_power(sc, cfg);
    throw std::invalid_argument("unknown scheme: " + scheme);
}

std::vector<std::string> selected_schemes(const std::string& scheme) {
    if (scheme == "all") return {"proposed", "equal-time", "max-power"};
    return {scheme};
}

int cmd_generate(const Options& opt) {
    SystemParams params;
    SolverConfig solver;
    std::uint64_t seed = opt.seed;
    apply_config_sources(opt, params, solver, seed);
    const Scenario sc = generate_scenario(seed, params);
    json j = sc;
    write_output(opt.out_path, j.dump(2) + "\n");
    log_info("generated scenario seed=" + std::to_string(seed));
    return 0;
}

int cmd_solve(const Options& opt) {
    const Scenario sc = load_scenario(opt);
    SolverConfig cfg = load_solver_config(opt);
    if (opt.lambda_th <= 0) cfg.lambda_th = sc.params.lambda_th;
    json out;
    bool any_infeasible = false;
    const auto schemes = selected_schemes(opt.scheme);
    for (const auto& scheme : schemes) {
        log_info("solving scheme " + scheme);
        const SolveReport rep = run_scheme(scheme, sc, cfg);
        any_infeasible = any_infeasible || rep.status == SolveStatus::Infeasible;
        if (schemes.size() == 1) out = rep;
        else out[scheme] = rep;
    }
    write_output(opt.out_path, out.dump(2) + "\n");
    return any_infeasible ? 2 : 0;
}

struct SweepRow {
    double axis_value = 0.0;
    std::string scheme;
    double min_throughput = 0.0;
    std::string status;
    int iterations = 0;
};

int cmd_sweep(const Options& opt) {
    if (opt.sweep_axis != "eta" && opt.sweep_axis != "p0")
        throw std::invalid_argument("--sweep-axis must be eta or p0");
    if (opt.sweep_values.empty()) throw std::invalid_argument("--sweep-values is required");
    for (std::size_t i = 1; i < opt.sweep_values.size(); ++i)
        if (!(opt.sweep_values[i] > opt.sweep_values[i - 1]))
            throw std::invalid_argument("--sweep-values must be strictly increasing");

    const Scenario base = load_scenario(opt);
    SolverConfig cfg = load_solver_config(opt);
    if (opt.lambda_th <= 0) cfg.lambda_th = base.params.lambda_th;
    const auto schemes = selected_schemes(opt.scheme);

    struct Task {
        double value;
        std::string scheme;
    };
    std::vector<Task> tasks;
    for (double v : opt.sweep_values)
        for (const auto& s : schemes) tasks.push_back({v, s});

    std::vector<SweepRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    const int jobs = opt.jobs > 0
                         ? opt.jobs
                         : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            Scenario sc = base;
            if (opt.sweep_axis == "eta") sc.params.eta = task.value;
            else sc.params.p0 = task.value;
            SweepRow row;
            row.axis_value = task.value;
            row.scheme = task.scheme;
            try {
                const SolveReport rep = run_scheme(task.scheme, sc, cfg);
                row.status = to_string(rep.status);
                row.iterations = rep.iterations;
                row.min_throughput = rep.status == SolveStatus::Infeasible
                                         ? 0.0
                                         : min_throughput(rep.allocation, sc);
            } catch (const std::exception& e) {
                std::cerr << "sweep point failed (" << task.scheme << ", " << task.value
                          << "): " << e.what() << "\n";
                row.status = "Failed";
                failed = true;
            }
            rows[i] = row;
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::string content;
    if (opt.format == "csv") {
        content = "axis_value,scheme,min_throughput_bits,status,iterations\n";
        for (const auto& r : rows) {
            content += fmt_double(r.axis_value) + "," + r.scheme + "," +
                       fmt_double(r.min_throughput) + "," + r.status + "," +
                       std::to_string(r.iterations) + "\n";
        }
    } else if (opt.format == "json") {
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back(json{{"axis_value", r.axis_value},
                               {"scheme", r.scheme},
                               {"min_throughput_bits", r.min_throughput},
                               {"status", r.status},
                               {"iterations", r.iterations}});
        content = arr.dump(2) + "\n";
    } else {
        throw std::invalid_argument("--format must be csv or json");
    }
    write_output(opt.out_path, content);

    // Post-check: along the increasing axis, each scheme's throughput must be
    // non-decreasing (Infeasible rows excluded).
    bool monotone = true;
    for (const auto& scheme : schemes) {
        double prev = -1.0;
        for (const auto& r : rows) {
            if (r.scheme != scheme || r.status != "Converged") continue;
            if (prev >= 0 && r.min_throughput < prev * (1.0 - 1e-6)) monotone = false;
            prev = r.min_throughput;
        }
    }
    if (!monotone) std::cerr << "sweep post-check failed: non-monotone min throughput\n";
    if (failed) return 1;
    return monotone ? 0 : 3;
}

int cmd_dump_tables(const Options& opt) {
    const Scenario sc = load_scenario(opt);
    const json j = build_tables(sc);
    write_output(opt.out_path, j.dump(2) + "\n");
    return 0;
}

int cmd_oracle(const Options& opt) {
    const Scenario sc = load_scenario(opt);
    const SensingTables tables = build_tables(sc);
    const GridSpec grid = default_grid(sc, tables, opt.oracle_points);
    const OracleResult res = grid_search_refine(sc, tables, grid, opt.oracle_stages);
    json j{{"feasible", res.feasible},
           {"objective_bits", res.objective},
           {"allocation",
            json{{"t0", res.best.t0}, {"t", res.best.t}, {"p", res.best.p}}}};
    write_output(opt.out_path, j.dump(2) + "\n");
    return res.feasible ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Max-min throughput allocation for wireless-powered ISAC under CRB constraints"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub, bool with_scheme) {
        sub->add_option("--seed", opt.seed, "scenario seed")->each([&](const std::string&) {
            opt.seed_set = true;
        });
        sub->add_option("--config", opt.config_path, "flat key=value config file");
        sub->add_option("--set", opt.sets, "override a config key, e.g. params.eta=5e-2");
        sub->add_option("--out", opt.out_path, "output path ('-' for stdout)");
        sub->add_option("--max-outer-iters", opt.max_outer_iters, "SCA outer iteration cap");
        sub->add_option("--lambda-th", opt.lambda_th, "SCA stopping threshold");
        if (with_scheme) {
            sub->add_option("--scenario", opt.scenario_path, "scenario JSON file");
            sub->add_option("--scheme", opt.scheme,
                            "proposed | equal-time | max-power | all");
        }
    };

    auto* gen = app.add_subcommand("generate", "generate a scenario JSON file");
    add_common(gen, false);

    auto* solve = app.add_subcommand("solve", "solve one scenario");
    add_common(solve, true);

    auto* sweep = app.add_subcommand("sweep", "solve across a parameter sweep");
    add_common(sweep, true);
    sweep->add_option("--sweep-axis", opt.sweep_axis, "eta | p0");
    sweep->add_option("--sweep-values", opt.sweep_values, "strictly increasing values")
        ->delimiter(',');
    sweep->add_option("--format", opt.format, "csv | json");
    sweep->add_option("--jobs", opt.jobs, "worker pool size (default: CPU count)");

    auto* dump = app.add_subcommand("dump-tables", "dump the sensing coefficient tables");
    add_common(dump, true);

    auto* oracle = app.add_subcommand("oracle", "brute-force grid search (num_users <= 3)");
    add_common(oracle, true);
    oracle->add_option("--points", opt.oracle_points, "grid points per axis");
    oracle->add_option("--stages", opt.oracle_stages, "refinement stages");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(opt);
        if (solve->parsed()) return cmd_solve(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
        if (dump->parsed()) return cmd_dump_tables(opt);
        if (oracle->parsed()) return cmd_oracle(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
