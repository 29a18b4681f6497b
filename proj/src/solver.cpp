#include "wptisac/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wptisac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAuditTol = 1e-6;

// Barrier objective with the linear term shifted by a reference value; the
// shift leaves gradients untouched but keeps the magnitude of f small enough
// that the line search can resolve decrements at large barrier parameters.
double barrier_value(const Subproblem& sp, const Eigen::VectorXd& x, double tb, double s_ref) {
    double f = -tb * (x[sp.objective_index] - s_ref);
    for (const auto& r : sp.residuals) {
        const double g = r.value(x);
        if (!(g < 0.0)) return kInf;  // also catches NaN
        f -= std::log(-g);
    }
    return f;
}

void barrier_derivs(const Subproblem& sp, const Eigen::VectorXd& x, double tb,
                    Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
    grad.setZero(x.size());
    hess.setZero(x.size(), x.size());
    grad[sp.objective_index] = -tb;
    for (const auto& r : sp.residuals) {
        const double g = r.value(x);
        const Eigen::VectorXd gr = r.gradient(x);
        grad += gr / (-g);
        hess += r.hessian(x) / (-g) + (gr * gr.transpose()) / (g * g);
    }
}

}  // namespace

void SolverConfig::validate() const {
    const bool ok = barrier_t_init > 0 && barrier_mult > 1 && gap_target > 0 && newton_tol > 0 &&
                    newton_max_iters > 0 && armijo > 0 && armijo < 1 && backtrack > 0 &&
                    backtrack < 1 && lambda_th > 0 && max_outer_iters > 0 && t0_floor > 0;
    if (!ok) throw std::invalid_argument("SolverConfig: invalid field values");
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "Converged";
        case SolveStatus::MaxIters: return "MaxIters";
        case SolveStatus::Infeasible: return "Infeasible";
    }
    return "Unknown";
}

Eigen::VectorXd solve_subproblem(const Subproblem& sp, const Eigen::VectorXd& start,
                                 const SolverConfig& cfg) {
    cfg.validate();
    if (start.size() != sp.dim) throw std::invalid_argument("solve_subproblem: start dimension");
    for (const auto& r : sp.residuals) {
        if (!(r.value(start) < 0.0))
            throw std::invalid_argument("solve_subproblem: start not strictly feasible (" +
                                        r.name + ")");
    }

    Eigen::VectorXd x = start;
    Eigen::VectorXd grad(sp.dim);
    Eigen::MatrixXd hess(sp.dim, sp.dim);
    double tb = cfg.barrier_t_init;

    while (true) {
        int iter = 0;
        for (; iter < cfg.newton_max_iters; ++iter) {
            barrier_derivs(sp, x, tb, grad, hess);
            // Per-coordinate relative regularization: a uniform shift sized by
            // the largest diagonal entry (1/g^2 on a nearly active constraint)
            // would swamp low-curvature directions and stall convergence.
            hess.diagonal().array() += 1e-12 * (hess.diagonal().array().abs() + 1.0);
            const Eigen::VectorXd step = hess.ldlt().solve(-grad);
            const double decrement2 = -grad.dot(step);
            if (decrement2 / 2.0 <= cfg.newton_tol) break;

            const double s_ref = x[sp.objective_index];
            const double fx = barrier_value(sp, x, tb, s_ref);
            const double slope = grad.dot(step);
            double alpha = 1.0;
            bool stalled = false;
            while (barrier_value(sp, x + alpha * step, tb, s_ref) >
                   fx + cfg.armijo * alpha * slope) {
                alpha *= cfg.backtrack;
                // Once the prospective decrease falls below the rounding noise
                // of fx the iterate is at the numeric floor for this stage.
                if (alpha * std::abs(slope) < 1e-14 * (1.0 + std::abs(fx))) {
                    stalled = true;
                    break;
                }
            }
            if (stalled) {
                if (decrement2 / 2.0 <= 1e-3) break;  // centered enough for this stage
                throw std::runtime_error("solve_subproblem: line search stall");
            }
            x += alpha * step;
            // Accepted decrease below the rounding noise of fx cannot move the
            // iterate further in double precision; with a small decrement the
            // point is centered to numeric accuracy for this stage.
            if (alpha * std::abs(slope) < 1e-12 * (1.0 + std::abs(fx)) &&
                decrement2 / 2.0 <= 1e-3)
                break;
        }
        if (iter == cfg.newton_max_iters)
            throw std::runtime_error("solve_subproblem: Newton iteration cap reached");
        if (1.0 / tb <= cfg.gap_target) break;
        tb *= cfg.barrier_mult;
    }
    return x;
}

namespace {

bool crb_strictly_feasible(const std::vector<double>& p, const SensingTables& tables,
                           const SystemParams& params) {
    for (int n = 0; n < params.num_targets; ++n) {
        if (!(fn_value(p, tables, params.eta, params.p0, n) < 0.0)) return false;
    }
    return true;
}

// Time split used by the initializer; shrinks below caps to stay strictly
// interior and stretches slots that would collapse onto the t0 floor by
// lowering the corresponding power.
struct InitSplit {
    double t0 = 0.0;
    std::vector<double> t;
    std::vector<double> p;
    bool ok = false;
};

InitSplit split_times(const Scenario& sc, std::vector<double> p, const SensingTables& tables,
                      const SolverConfig& cfg) {
    const auto& prm = sc.params;
    const int M = prm.num_users;
    InitSplit out;
    out.t0 = prm.t_max / 2.0;
    out.t.resize(static_cast<std::size_t>(M));
    bool power_changed = false;
    for (int m = 0; m < M; ++m) {
        const auto mm = static_cast<std::size_t>(m);
        const double e = harvested_energy(out.t0, prm.p0, prm.zeta[mm], sc.h_bs_user[mm]);
        double tm = std::min(prm.t_max / (2.0 * M), e / p[mm]) * (1.0 - 1e-3);
        if (tm <= 10.0 * cfg.t0_floor) {
            p[mm] = std::min(p[mm], e / (100.0 * cfg.t0_floor));
            if (!(p[mm] > 0)) return out;
            tm = std::min(prm.t_max / (2.0 * M), e / p[mm]) * (1.0 - 1e-3);
            power_changed = true;
        }
        out.t[mm] = tm;
    }
    if (power_changed && !crb_strictly_feasible(p, tables, prm)) return out;
    out.p = std::move(p);
    out.ok = true;
    return out;
}

}  // namespace

std::optional<LogPoint> init_feasible(const Scenario& sc, const SensingTables& tables,
                                      const SolverConfig& cfg) {
    const auto& prm = sc.params;
    const int M = prm.num_users;
    const double p_hi = prm.p_max * (1.0 - 1e-3);  // strictly inside the cap

    detail::Rng rng(sc.seed ^ 0xda7a5eedULL);
    constexpr int kPerturbations = 64;
    for (int attempt = 0; attempt <= kPerturbations; ++attempt) {
        std::vector<double> p(static_cast<std::size_t>(M));
        if (attempt == 0) {
            std::fill(p.begin(), p.end(), p_hi);
        } else {
            for (auto& pm : p) pm = p_hi * std::max(rng.uniform(), 1e-3);
        }
        if (!crb_strictly_feasible(p, tables, prm)) continue;
        const InitSplit split = split_times(sc, std::move(p), tables, cfg);
        if (!split.ok) continue;
        return to_log_domain(Allocation{split.t0, split.t, split.p});
    }
    return std::nullopt;
}

namespace {

double min_log_throughput(const LogPoint& pt, const Scenario& sc) {
    double best = kInf;
    for (std::size_t m = 0; m < pt.u.size(); ++m) {
        best = std::min(best, log_throughput(pt.u[m], pt.v[m], sc.h_bs_user[m], sc.params.sigma2,
                                             sc.params.bandwidth));
    }
    return best;
}

void finalize_report(SolveReport& rep, const Scenario& sc, const SensingTables& tables) {
    rep.throughput_per_user = throughput_per_user(rep.allocation, sc);
    rep.crb_per_target.clear();
    for (int n = 0; n < sc.params.num_targets; ++n) {
        const auto tr = crb_trace(fim(rep.allocation.p, sc.params.p0, tables, n));
        rep.crb_per_target.push_back(tr ? *tr : -1.0);
    }
    const double violation = allocation_violation(rep.allocation, sc, tables);
    if (violation > kAuditTol)
        throw std::runtime_error("solution audit failed: relative violation " +
                                 std::to_string(violation));
}

// Shared SCA driver. `build` assembles the convex subproblem at the incumbent
// power point, `pack`/`unpack` translate between LogPoint and the subproblem's
// variable vector (they differ for the tied equal-time scheme).
template <typename Build, typename Pack, typename Unpack>
SolveReport run_sca(const Scenario& sc, const SensingTables& tables, const SolverConfig& cfg,
                    const LogPoint& init, Build&& build, Pack&& pack, Unpack&& unpack) {
    SolveReport rep;
    LogPoint cur = init;
    double f_cur = min_throughput(from_log_domain(cur), sc);
    rep.objective_trace.push_back(f_cur);
    rep.status = SolveStatus::MaxIters;

    for (int r = 1; r <= cfg.max_outer_iters; ++r) {
        rep.iterations = r;
        const Subproblem sp = build(cur.v);
        const Eigen::VectorXd x0 = pack(cur, min_log_throughput(cur, sc) - 1.0);
        const Eigen::VectorXd xs = solve_subproblem(sp, x0, cfg);
        const LogPoint next = unpack(xs);
        const double f_next = min_throughput(from_log_domain(next), sc);
        const double improvement = (f_next - f_cur) / std::max(1.0, std::abs(f_cur));
        if (f_next > f_cur) {
            cur = next;
            rep.objective_trace.push_back(f_next);
            f_cur = f_next;
        }
        if (improvement < cfg.lambda_th) {
            rep.status = SolveStatus::Converged;
            break;
        }
    }
    rep.allocation = from_log_domain(cur);
    finalize_report(rep, sc, tables);
    return rep;
}

SolveReport infeasible_report() {
    SolveReport rep;
    rep.status = SolveStatus::Infeasible;
    return rep;
}

}  // namespace

SolveReport sca_solve(const Scenario& sc, const SolverConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const SensingTables tables = build_tables(sc);
    const auto init = init_feasible(sc, tables, cfg);
    SolveReport rep;
    if (!init) {
        rep = infeasible_report();
    } else {
        const int M = sc.params.num_users;
        const VariableLayout lay{M};
        rep = run_sca(
            sc, tables, cfg, *init,
            [&](const std::vector<double>& v_r) {
                return build_subproblem(sc, tables, v_r);
            },
            [&](const LogPoint& pt, double s) {
                Eigen::VectorXd x(lay.dim());
                x[lay.t0()] = pt.t0;
                for (int m = 0; m < M; ++m) {
                    x[lay.u(m)] = pt.u[static_cast<std::size_t>(m)];
                    x[lay.v(m)] = pt.v[static_cast<std::size_t>(m)];
                }
                x[lay.s()] = s;
                return x;
            },
            [&](const Eigen::VectorXd& x) {
                LogPoint pt;
                pt.t0 = x[lay.t0()];
                pt.u.resize(static_cast<std::size_t>(M));
                pt.v.resize(static_cast<std::size_t>(M));
                for (int m = 0; m < M; ++m) {
                    pt.u[static_cast<std::size_t>(m)] = x[lay.u(m)];
                    pt.v[static_cast<std::size_t>(m)] = x[lay.v(m)];
                }
                return pt;
            });
    }
    rep.timing_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return rep;
}

namespace {

// Equal-time layout: x = [t0, u, v_1..v_M, s].
struct EqualTimeLayout {
    int num_users = 0;
    int t0() const { return 0; }
    int u() const { return 1; }
    int v(int m) const { return 2 + m; }
    int s() const { return 2 + num_users; }
    int dim() const { return 3 + num_users; }
};

Subproblem build_equal_time_subproblem(const Scenario& sc, const SensingTables& tables,
                                       const std::vector<double>& v_r) {
    // Reuse the standard builder's residuals by remapping variables: build over
    // the full layout and compose with the tying map u_m = u. Gradients and
    // Hessians pull back through the (constant) linear map.
    const int M = sc.params.num_users;
    const VariableLayout full{M};
    const EqualTimeLayout tied{M};
    Subproblem inner = build_subproblem(sc, tables, v_r);

    Eigen::MatrixXd map = Eigen::MatrixXd::Zero(full.dim(), tied.dim());
    map(full.t0(), tied.t0()) = 1.0;
    for (int m = 0; m < M; ++m) {
        map(full.u(m), tied.u()) = 1.0;
        map(full.v(m), tied.v(m)) = 1.0;
    }
    map(full.s(), tied.s()) = 1.0;

    Subproblem sp;
    sp.dim = tied.dim();
    sp.objective_index = tied.s();
    for (auto& r : inner.residuals) {
        sp.residuals.push_back(Residual{
            r.name,
            [map, value = r.value](const Eigen::VectorXd& x) { return value(map * x); },
            [map, gradient = r.gradient](const Eigen::VectorXd& x) {
                return Eigen::VectorXd(map.transpose() * gradient(map * x));
            },
            [map, hessian = r.hessian](const Eigen::VectorXd& x) {
                return Eigen::MatrixXd(map.transpose() * hessian(map * x) * map);
            }});
    }
    return sp;
}

}  // namespace

SolveReport solve_equal_time(const Scenario& sc, const SolverConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const SensingTables tables = build_tables(sc);
    auto init = init_feasible(sc, tables, cfg);
    SolveReport rep;
    if (!init) {
        rep = infeasible_report();
    } else {
        // Tie the initializer's slots to their common minimum.
        const double t_common = *std::min_element(init->u.begin(), init->u.end());
        std::fill(init->u.begin(), init->u.end(), t_common);

        const int M = sc.params.num_users;
        const EqualTimeLayout lay{M};
        rep = run_sca(
            sc, tables, cfg, *init,
            [&](const std::vector<double>& v_r) {
                return build_equal_time_subproblem(sc, tables, v_r);
            },
            [&](const LogPoint& pt, double s) {
                Eigen::VectorXd x(lay.dim());
                x[lay.t0()] = pt.t0;
                x[lay.u()] = pt.u[0];
                for (int m = 0; m < M; ++m) x[lay.v(m)] = pt.v[static_cast<std::size_t>(m)];
                x[lay.s()] = s;
                return x;
            },
            [&](const Eigen::VectorXd& x) {
                LogPoint pt;
                pt.t0 = x[lay.t0()];
                pt.u.assign(static_cast<std::size_t>(M), x[lay.u()]);
                pt.v.resize(static_cast<std::size_t>(M));
                for (int m = 0; m < M; ++m) pt.v[static_cast<std::size_t>(m)] = x[lay.v(m)];
                return pt;
            });
    }
    rep.timing_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return rep;
}

SolveReport solve_max_power(const Scenario& sc, const SolverConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const SensingTables tables = build_tables(sc);
    const auto& prm = sc.params;
    const int M = prm.num_users;

    SolveReport rep;
    const std::vector<double> p_fixed(static_cast<std::size_t>(M), prm.p_max);
    bool crb_ok = true;
    for (int n = 0; n < prm.num_targets && crb_ok; ++n)
        crb_ok = fn_value(p_fixed, tables, prm.eta, prm.p0, n) <= 0.0;

    if (!crb_ok) {
        rep = infeasible_report();
    } else {
        // With p fixed the problem in (t0, u, s) is already convex: the
        // epigraph constraints are affine and everything else matches (P2).
        const int it0 = 0;
        const auto iu = [](int m) { return 1 + m; };
        const int is = 1 + M;
        const int dim = 2 + M;

        Subproblem sp;
        sp.dim = dim;
        sp.objective_index = is;
        std::vector<double> c(static_cast<std::size_t>(M));  // log rate at P_max, per second
        for (int m = 0; m < M; ++m)
            c[static_cast<std::size_t>(m)] = log_throughput(
                0.0, std::log(prm.p_max), sc.h_bs_user[static_cast<std::size_t>(m)], prm.sigma2,
                prm.bandwidth);

        for (int m = 0; m < M; ++m) {
            const double cm = c[static_cast<std::size_t>(m)];
            const int ium = iu(m);
            sp.residuals.push_back(Residual{
                "epigraph_" + std::to_string(m + 1),
                [=](const Eigen::VectorXd& x) { return x[is] - x[ium] - cm; },
                [=](const Eigen::VectorXd&) {
                    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
                    g[is] = 1.0;
                    g[ium] = -1.0;
                    return g;
                },
                [=](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(dim, dim); }});
        }
        sp.residuals.push_back(Residual{
            "time_budget",
            [=, t_max = prm.t_max](const Eigen::VectorXd& x) {
                double s = x[it0] - t_max;
                for (int m = 0; m < M; ++m) s += std::exp(x[iu(m)]);
                return s;
            },
            [=](const Eigen::VectorXd& x) {
                Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
                g[it0] = 1.0;
                for (int m = 0; m < M; ++m) g[iu(m)] = std::exp(x[iu(m)]);
                return g;
            },
            [=](const Eigen::VectorXd& x) {
                Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
                for (int m = 0; m < M; ++m) h(iu(m), iu(m)) = std::exp(x[iu(m)]);
                return h;
            }});
        for (int m = 0; m < M; ++m) {
            const double log_cap = std::log(prm.zeta[static_cast<std::size_t>(m)] *
                                            sc.h_bs_user[static_cast<std::size_t>(m)] * prm.p0 /
                                            prm.p_max);
            const int ium = iu(m);
            sp.residuals.push_back(Residual{
                "energy_" + std::to_string(m + 1),
                [=](const Eigen::VectorXd& x) { return x[ium] - log_cap - std::log(x[it0]); },
                [=](const Eigen::VectorXd& x) {
                    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
                    g[ium] = 1.0;
                    g[it0] = -1.0 / x[it0];
                    return g;
                },
                [=](const Eigen::VectorXd& x) {
                    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
                    h(it0, it0) = 1.0 / (x[it0] * x[it0]);
                    return h;
                }});
        }
        sp.residuals.push_back(Residual{
            "t0_floor",
            [=, floor = cfg.t0_floor](const Eigen::VectorXd& x) { return floor - x[it0]; },
            [=](const Eigen::VectorXd&) {
                Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
                g[it0] = -1.0;
                return g;
            },
            [=](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(dim, dim); }});

        // Strictly feasible start.
        Eigen::VectorXd x0(dim);
        x0[it0] = prm.t_max / 2.0;
        double s0 = kInf;
        for (int m = 0; m < M; ++m) {
            const auto mm = static_cast<std::size_t>(m);
            const double e = harvested_energy(x0[it0], prm.p0, prm.zeta[mm], sc.h_bs_user[mm]);
            const double tm = std::min(prm.t_max / (2.0 * M), e / prm.p_max) * (1.0 - 1e-3);
            x0[iu(m)] = std::log(tm);
            s0 = std::min(s0, x0[iu(m)] + c[mm]);
        }
        x0[is] = s0 - 1.0;

        Allocation init_alloc;
        init_alloc.t0 = x0[it0];
        for (int m = 0; m < M; ++m) init_alloc.t.push_back(std::exp(x0[iu(m)]));
        init_alloc.p = p_fixed;
        const double f_init = min_throughput(init_alloc, sc);

        const Eigen::VectorXd xs = solve_subproblem(sp, x0, cfg);
        Allocation alloc;
        alloc.t0 = xs[it0];
        for (int m = 0; m < M; ++m) alloc.t.push_back(std::exp(xs[iu(m)]));
        alloc.p = p_fixed;

        rep.status = SolveStatus::Converged;
        rep.iterations = 1;
        rep.allocation = alloc;
        rep.objective_trace.push_back(f_init);
        const double f_final = min_throughput(alloc, sc);
        if (f_final > f_init) rep.objective_trace.push_back(f_final);
        finalize_report(rep, sc, tables);
    }
    rep.timing_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return rep;
}

void to_json(nlohmann::json& j, const SolveReport& r) {
    nlohmann::json alloc = nlohmann::json{
        {"t0", r.allocation.t0}, {"t", r.allocation.t}, {"p", r.allocation.p}};
    j = nlohmann::json{{"status", to_string(r.status)},
                       {"objective_trace", r.objective_trace},
                       {"allocation", alloc},
                       {"throughput_per_user", r.throughput_per_user},
                       {"crb_per_target", r.crb_per_target},
                       {"iterations", r.iterations},
                       {"timing_ms", 0.0}};
}

}  // namespace wptisac
