// Acceptance gate: one self-contained check per release criterion, each
// reporting a single [PASS]/[FAIL] line. Exits nonzero when any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wptisac/oracle.hpp"
#include "wptisac/reformulation.hpp"
#include "wptisac/scenario.hpp"
#include "wptisac/sensing.hpp"
#include "wptisac/solver.hpp"

using namespace wptisac;

namespace {

int g_failures = 0;

void report(int id, const std::string& what, bool ok, const std::string& detail) {
    std::printf("[%s] %d. %s — %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

double now_s() {
    using clock = std::chrono::steady_clock;
    static const auto t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

Scenario small_scenario(std::uint64_t seed, int users, int targets) {
    SystemParams params;
    params.num_users = users;
    params.num_targets = targets;
    params.normalize_and_validate();
    return generate_scenario(seed, params);
}

std::vector<double> random_powers(detail::Rng& rng, int count, double p_max) {
    std::vector<double> p(static_cast<std::size_t>(count));
    for (auto& v : p) v = p_max * std::pow(10.0, -4.0 * rng.uniform());
    return p;
}

// --- 1. algebraic identities -------------------------------------------------

void criterion_identities() {
    detail::Rng rng(101);
    double worst_expand = 0.0, worst_fn = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int users = 1 + static_cast<int>(rng.uniform() * 3.0);
        const int targets = 1 + static_cast<int>(rng.uniform() * 3.0);
        const Scenario sc = small_scenario(1000 + trial, users, targets);
        const SensingTables tables = build_tables(sc);
        const std::vector<double> p = random_powers(rng, users, sc.params.p_max);
        const double eta = sc.params.eta * std::pow(10.0, 2.0 * rng.uniform() - 1.0);
        const int n = static_cast<int>(rng.uniform() * targets);

        const Fim2x2 j = fim(p, sc.params.p0, tables, n);
        const double det = j.a * j.b - j.c * j.c;

        // determinant expansion into the quadratic/cross coefficient tables
        double quad = 0.0;
        for (int i = 0; i < users; ++i)
            for (int k = 0; k < users; ++k)
                quad += tables.beta[i][k][n] * p[static_cast<std::size_t>(i)] *
                        p[static_cast<std::size_t>(k)];
        double cross = 0.0;
        for (int m = 0; m < users; ++m)
            cross += tables.phi[m][n] * p[static_cast<std::size_t>(m)];
        // The tables side sums non-negative terms, so the discrepancy is the
        // cancellation in a*b - c*c; the natural scale is the product a*b.
        const double det_tables = 0.5 * quad + sc.params.p0 * cross;
        worst_expand = std::max(
            worst_expand, std::abs(det - det_tables) / std::max(1.0, std::abs(j.a * j.b)));

        // polynomial form against the direct A + B - eta (AB - C^2)
        const double direct = j.a + j.b - eta * det;
        const double poly = fn_value(p, tables, eta, sc.params.p0, n);
        worst_fn =
            std::max(worst_fn, std::abs(direct - poly) / std::max(1.0, std::abs(direct)));
    }
    const bool ok = worst_expand <= 1e-9 && worst_fn <= 1e-9;
    report(1, "identity suite (1000 draws)",
           ok, "determinant expansion rel err " + fmt(worst_expand) +
                   ", polynomial form rel err " + fmt(worst_fn));
}

// --- 2. analytic derivatives -------------------------------------------------

double hessian_fd_error(const Residual& r, const Eigen::VectorXd& x, double h) {
    const Eigen::MatrixXd hess = r.hessian(x);
    double worst = 0.0;
    for (int j = 0; j < x.size(); ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Eigen::VectorXd col = (r.gradient(xp) - r.gradient(xm)) / (2.0 * h);
        for (int i = 0; i < x.size(); ++i) {
            const double err = std::abs(col[i] - hess(i, j)) /
                               std::max(1.0, hess.cwiseAbs().maxCoeff());
            worst = std::max(worst, err);
        }
    }
    return worst;
}

void criterion_derivatives() {
    detail::Rng rng(202);
    const Scenario sc = small_scenario(42, 3, 2);
    const SensingTables tables = build_tables(sc);
    const VariableLayout lay{sc.params.num_users};

    double worst_grad = 0.0, worst_hess = 0.0;
    std::vector<double> v_r(3, std::log(0.3));
    const Subproblem sp = build_subproblem(sc, tables, v_r);
    for (const Residual& r : sp.residuals) {
        for (int pt = 0; pt < 100; ++pt) {
            Eigen::VectorXd x(lay.dim());
            x[lay.t0()] = 0.5 + 8.0 * rng.uniform();
            for (int m = 0; m < lay.num_users; ++m) {
                x[lay.u(m)] = std::log(0.05 + 2.0 * rng.uniform());
                x[lay.v(m)] = std::log(sc.params.p_max * std::pow(10.0, -3.0 * rng.uniform()));
            }
            x[lay.s()] = 10.0 * rng.uniform();
            const double g_err = finite_diff_check(r.value, r.gradient, x, 1e-5);
            const double h_err = hessian_fd_error(r, x, 1e-5);
            worst_grad = std::max(worst_grad, g_err);
            worst_hess = std::max(worst_hess, h_err);
        }
    }

    // scalar building block used inside the epigraph residuals
    for (int pt = 0; pt < 100; ++pt) {
        const double h0 = sc.h_bs_user[0];
        const double u = std::log(0.05 + 2.0 * rng.uniform());
        const double v = std::log(sc.params.p_max * std::pow(10.0, -3.0 * rng.uniform()));
        const auto d = log_throughput_derivs(u, v, h0, sc.params.sigma2, sc.params.bandwidth);
        const double h = 1e-5;
        auto f = [&](double uu, double vv) {
            return log_throughput(uu, vv, h0, sc.params.sigma2, sc.params.bandwidth);
        };
        const double fd_u = (f(u + h, v) - f(u - h, v)) / (2.0 * h);
        const double fd_v = (f(u, v + h) - f(u, v - h)) / (2.0 * h);
        // second derivative as a first difference of the analytic dv: a second
        // difference of function values loses too many digits to eps/h^2
        auto dv_at = [&](double vv) {
            return log_throughput_derivs(u, vv, h0, sc.params.sigma2, sc.params.bandwidth).dv;
        };
        const double fd_vv = (dv_at(v + h) - dv_at(v - h)) / (2.0 * h);
        worst_grad = std::max({worst_grad, std::abs(fd_u - d.du),
                               std::abs(fd_v - d.dv) / std::max(1.0, std::abs(d.dv))});
        worst_hess = std::max(worst_hess,
                              std::abs(fd_vv - d.dvv) / std::max(1.0, std::abs(d.dvv)));
    }

    const bool ok = worst_grad <= 1e-6 && worst_hess <= 1e-6;
    report(2, "derivative suite (100 points per residual)",
           ok, "gradient rel err " + fmt(worst_grad) + ", Hessian rel err " + fmt(worst_hess));
}

// --- 3. majorization ----------------------------------------------------------

void criterion_majorization() {
    detail::Rng rng(303);
    double worst_gap = 0.0, worst_tangent = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int users = 1 + static_cast<int>(rng.uniform() * 3.0);
        const int targets = 1 + static_cast<int>(rng.uniform() * 2.0);
        const Scenario sc = small_scenario(3000 + trial, users, targets);
        const SensingTables tables = build_tables(sc);
        std::vector<double> v(static_cast<std::size_t>(users)), v_r(v.size());
        for (std::size_t m = 0; m < v.size(); ++m) {
            v[m] = std::log(sc.params.p_max) - 6.0 * rng.uniform();
            v_r[m] = std::log(sc.params.p_max) - 6.0 * rng.uniform();
        }
        const int n = static_cast<int>(rng.uniform() * targets);
        const double f = ftilde(v, tables, sc.params.eta, sc.params.p0, n);
        const double lin = ftilde_linearized(v, v_r, tables, sc.params.eta, sc.params.p0, n);
        const double scale = std::max({1.0, std::abs(f), std::abs(lin)});
        worst_gap = std::max(worst_gap, (f - lin) / scale);

        const double at_ref = ftilde_linearized(v_r, v_r, tables, sc.params.eta, sc.params.p0, n);
        const double f_ref = ftilde(v_r, tables, sc.params.eta, sc.params.p0, n);
        worst_tangent = std::max(
            worst_tangent, std::abs(at_ref - f_ref) / std::max(1.0, std::abs(f_ref)));
    }
    const bool ok = worst_gap <= 1e-9 && worst_tangent <= 1e-9;
    report(3, "majorization suite (1000 pairs)",
           ok, "worst bound violation " + fmt(worst_gap) + ", tangency err " + fmt(worst_tangent));
}

// --- 4. concavity ---------------------------------------------------------------

void criterion_concavity() {
    detail::Rng rng(404);
    const Scenario sc = small_scenario(44, 4, 1);
    double worst = 0.0;
    auto rand_point = [&](std::vector<double>& u, std::vector<double>& v) {
        u.resize(4);
        v.resize(4);
        for (int m = 0; m < 4; ++m) {
            u[static_cast<std::size_t>(m)] = std::log(0.05 + 3.0 * rng.uniform());
            v[static_cast<std::size_t>(m)] =
                std::log(sc.params.p_max) - 5.0 * rng.uniform();
        }
    };
    auto min_log = [&](const std::vector<double>& u, const std::vector<double>& v) {
        double best = std::numeric_limits<double>::infinity();
        for (int m = 0; m < 4; ++m)
            best = std::min(best, log_throughput(u[static_cast<std::size_t>(m)],
                                                 v[static_cast<std::size_t>(m)],
                                                 sc.h_bs_user[static_cast<std::size_t>(m)],
                                                 sc.params.sigma2, sc.params.bandwidth));
        return best;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> ua, va, ub, vb, um(4), vm(4);
        rand_point(ua, va);
        rand_point(ub, vb);
        for (int m = 0; m < 4; ++m) {
            um[static_cast<std::size_t>(m)] =
                0.5 * (ua[static_cast<std::size_t>(m)] + ub[static_cast<std::size_t>(m)]);
            vm[static_cast<std::size_t>(m)] =
                0.5 * (va[static_cast<std::size_t>(m)] + vb[static_cast<std::size_t>(m)]);
        }
        // per-user log-throughput
        for (int m = 0; m < 1; ++m) {
            const double fa = log_throughput(ua[0], va[0], sc.h_bs_user[0], sc.params.sigma2,
                                             sc.params.bandwidth);
            const double fb = log_throughput(ub[0], vb[0], sc.h_bs_user[0], sc.params.sigma2,
                                             sc.params.bandwidth);
            const double fm = log_throughput(um[0], vm[0], sc.h_bs_user[0], sc.params.sigma2,
                                             sc.params.bandwidth);
            const double scale = std::max({1.0, std::abs(fa), std::abs(fb)});
            worst = std::max(worst, (0.5 * (fa + fb) - fm) / scale);
        }
        // min-of-logs objective
        const double fa = min_log(ua, va), fb = min_log(ub, vb), fm = min_log(um, vm);
        const double scale = std::max({1.0, std::abs(fa), std::abs(fb)});
        worst = std::max(worst, (0.5 * (fa + fb) - fm) / scale);
    }
    report(4, "concavity suite (1000 triples)", worst <= 1e-9,
           "worst midpoint violation " + fmt(worst));
}

// --- 5. oracle equivalence -------------------------------------------------------

void criterion_oracle() {
    const int combos[4][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    const double t_start = now_s();
    double worst_rel = 0.0;
    int feasible_count = 0;
    bool ok = true;
    std::string note;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto& mn = combos[(seed - 1) % 4];
        const Scenario sc = small_scenario(seed, mn[0], mn[1]);
        const SensingTables tables = build_tables(sc);
        SolverConfig cfg;
        const SolveReport rep = sca_solve(sc, cfg);
        const GridSpec grid = default_grid(sc, tables, 64);
        const OracleResult oracle = grid_search_refine(sc, tables, grid, 25);

        const bool sca_feasible = rep.status != SolveStatus::Infeasible;
        if (sca_feasible != oracle.feasible) {
            ok = false;
            note = "feasibility mismatch at seed " + std::to_string(seed);
            continue;
        }
        if (!sca_feasible) continue;
        ++feasible_count;
        const double sca_val = min_throughput(rep.allocation, sc);
        const double rel = std::abs(sca_val - oracle.objective) / oracle.objective;
        worst_rel = std::max(worst_rel, rel);
        if (rel > 0.02 || sca_val < 0.98 * oracle.objective) {
            ok = false;
            note = "gap " + fmt(rel) + " at seed " + std::to_string(seed);
        }
    }
    const double elapsed = now_s() - t_start;
    if (elapsed > 120.0) {
        ok = false;
        note += (note.empty() ? "" : "; ") + std::string("overran 2 min budget");
    }
    if (note.empty())
        note = std::to_string(feasible_count) + " feasible instances, worst rel gap " +
               fmt(worst_rel) + ", " + fmt(elapsed) + " s";
    report(5, "oracle equivalence (10 instances, 64-point grid)", ok, note);
}

// --- 6. default-scenario convergence ------------------------------------------------

void criterion_default_convergence() {
    const double t_start = now_s();
    const Scenario sc = small_scenario(7, 10, 10);
    const SensingTables tables = build_tables(sc);
    SolverConfig cfg;
    const SolveReport rep = sca_solve(sc, cfg);
    const double elapsed = now_s() - t_start;

    bool trace_monotone = true;
    for (std::size_t i = 1; i < rep.objective_trace.size(); ++i)
        if (rep.objective_trace[i] < rep.objective_trace[i - 1]) trace_monotone = false;
    const double violation =
        rep.status == SolveStatus::Infeasible
            ? std::numeric_limits<double>::infinity()
            : allocation_violation(rep.allocation, sc, tables);

    const bool ok = rep.status == SolveStatus::Converged && rep.iterations <= 30 &&
                    trace_monotone && violation <= 1e-6 && elapsed < 30.0;
    report(6, "default-scenario convergence (10 users, 10 targets, seed 7)", ok,
           to_string(rep.status) + " in " + std::to_string(rep.iterations) +
               " iterations, audit violation " + fmt(violation) + ", " + fmt(elapsed) + " s");
}

// --- 7. dominance over benchmarks ----------------------------------------------------

void criterion_dominance() {
    bool ok = true;
    std::string note;
    int compared = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Scenario sc = small_scenario(seed, 10, 10);
        SolverConfig cfg;
        const SolveReport proposed = sca_solve(sc, cfg);
        const SolveReport equal_time = solve_equal_time(sc, cfg);
        const SolveReport max_power = solve_max_power(sc, cfg);
        if (proposed.status == SolveStatus::Infeasible) {
            if (equal_time.status != SolveStatus::Infeasible ||
                max_power.status != SolveStatus::Infeasible) {
                ok = false;
                note = "benchmark feasible where proposed is not, seed " + std::to_string(seed);
            }
            continue;
        }
        const double best = min_throughput(proposed.allocation, sc);
        for (const SolveReport* bench : {&equal_time, &max_power}) {
            if (bench->status == SolveStatus::Infeasible) continue;
            ++compared;
            const double val = min_throughput(bench->allocation, sc);
            if (val > best * (1.0 + 1e-6)) {
                ok = false;
                note = "benchmark exceeds proposed by " + fmt(val / best - 1.0) + " at seed " +
                       std::to_string(seed);
            }
        }
    }
    if (note.empty())
        note = std::to_string(compared) + " feasible benchmark comparisons, slack 1e-6 held";
    report(7, "dominance over benchmarks (10 default scenarios)", ok, note);
}

// --- 8/9. CLI sweeps and determinism --------------------------------------------------

struct CliRun {
    int exit_code = -1;
    std::string bytes;
};

CliRun run_cli(const std::string& args, const std::string& out_file) {
    const std::string cmd =
        std::string(WPT_ISAC_CLI_PATH) + " " + args + " --out " + out_file + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    CliRun res;
    res.exit_code = WEXITSTATUS(rc);
    std::ifstream in(out_file, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    res.bytes = ss.str();
    std::remove(out_file.c_str());
    return res;
}

std::string g_eta_sweep_bytes;

void criterion_sweeps() {
    const CliRun eta = run_cli(
        "sweep --seed 7 --scheme all --sweep-axis eta --sweep-values 0.01,0.02,0.05,0.1",
        "/tmp/wptisac_accept_eta.csv");
    const CliRun p0 = run_cli(
        "sweep --seed 7 --scheme all --sweep-axis p0 --sweep-values 5,10,15,20",
        "/tmp/wptisac_accept_p0.csv");
    g_eta_sweep_bytes = eta.bytes;
    const bool ok = eta.exit_code == 0 && p0.exit_code == 0 && !eta.bytes.empty() &&
                    !p0.bytes.empty();
    report(8, "sweep monotonicity (eta and p0 axes, all schemes)", ok,
           "eta sweep exit " + std::to_string(eta.exit_code) + ", p0 sweep exit " +
               std::to_string(p0.exit_code));
}

void criterion_determinism() {
    const CliRun gen1 = run_cli("generate --seed 7", "/tmp/wptisac_accept_g1.json");
    const CliRun gen2 = run_cli("generate --seed 7", "/tmp/wptisac_accept_g2.json");
    const std::string solve_args =
        "solve --seed 7 --scheme all --set params.num_users=3 --set params.num_targets=2";
    const CliRun s1 = run_cli(solve_args, "/tmp/wptisac_accept_s1.json");
    const CliRun s2 = run_cli(solve_args, "/tmp/wptisac_accept_s2.json");
    const CliRun sweep2 = run_cli(
        "sweep --seed 7 --scheme all --sweep-axis eta --sweep-values 0.01,0.02,0.05,0.1 "
        "--jobs 2",
        "/tmp/wptisac_accept_eta2.csv");
    const bool ok = !gen1.bytes.empty() && gen1.bytes == gen2.bytes && !s1.bytes.empty() &&
                    s1.bytes == s2.bytes && !g_eta_sweep_bytes.empty() &&
                    sweep2.bytes == g_eta_sweep_bytes;
    report(9, "byte-identical determinism (generate, solve, sweep)", ok,
           ok ? "all repeated invocations matched" : "output bytes differed between runs");
}

}  // namespace

int main() {
    criterion_identities();
    criterion_derivatives();
    criterion_majorization();
    criterion_concavity();
    criterion_oracle();
    criterion_default_convergence();
    criterion_dominance();
    criterion_sweeps();
    criterion_determinism();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
