#include "wptisac/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wptisac {

namespace {

std::vector<double> linear_axis(const AxisSpec& a) {
    if (a.count < 2 || !(a.lo > 0) || !(a.hi >= a.lo))
        throw std::invalid_argument("grid axis: need count >= 2 and 0 < lo <= hi");
    std::vector<double> v(static_cast<std::size_t>(a.count));
    const double step = (a.hi - a.lo) / (a.count - 1);
    for (int i = 0; i < a.count; ++i) v[static_cast<std::size_t>(i)] = a.lo + step * i;
    return v;
}

std::vector<double> log_axis(const AxisSpec& a) {
    if (a.count < 2 || !(a.lo > 0) || !(a.hi >= a.lo))
        throw std::invalid_argument("grid axis: need count >= 2 and 0 < lo <= hi");
    std::vector<double> v(static_cast<std::size_t>(a.count));
    const double llo = std::log(a.lo);
    const double step = (std::log(a.hi) - llo) / (a.count - 1);
    for (int i = 0; i < a.count; ++i) v[static_cast<std::size_t>(i)] = std::exp(llo + step * i);
    v.front() = a.lo;
    v.back() = a.hi;
    return v;
}

// Largest value <= bound, or nullopt.
std::optional<double> largest_at_most(const std::vector<double>& vals, double bound) {
    auto it = std::upper_bound(vals.begin(), vals.end(), bound);
    if (it == vals.begin()) return std::nullopt;
    return *(it - 1);
}

}  // namespace

OracleResult grid_search_solve(const Scenario& sc, const SensingTables& tables,
                               const GridSpec& grid) {
    const auto& prm = sc.params;
    const int M = prm.num_users;
    if (M > 3) throw std::invalid_argument("grid_search_solve: num_users must be <= 3");
    if (static_cast<int>(grid.t.size()) != M || static_cast<int>(grid.p.size()) != M)
        throw std::invalid_argument("grid_search_solve: axis count mismatch");

    const std::vector<double> t0_vals = linear_axis(grid.t0);
    std::vector<std::vector<double>> t_vals(static_cast<std::size_t>(M));
    std::vector<std::vector<double>> p_vals(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        t_vals[static_cast<std::size_t>(m)] = log_axis(grid.t[static_cast<std::size_t>(m)]);
        p_vals[static_cast<std::size_t>(m)] = log_axis(grid.p[static_cast<std::size_t>(m)]);
    }

    OracleResult best;
    best.objective = -std::numeric_limits<double>::infinity();

    std::vector<double> p(static_cast<std::size_t>(M));
    std::vector<double> rate(static_cast<std::size_t>(M));  // bits per second at p_m
    std::vector<double> cap(static_cast<std::size_t>(M));   // per-slot duration cap
    std::vector<double> t(static_cast<std::size_t>(M));

    auto crb_ok = [&]() {
        for (int n = 0; n < prm.num_targets; ++n) {
            const double f = fn_value(p, tables, prm.eta, prm.p0, n);
            const double tol = grid.feas_tol * std::max(1.0, std::abs(tables.mu[static_cast<std::size_t>(n)]));
            if (f > tol) return false;
        }
        return true;
    };

    // Depth-first over the duration axes; the last axis is resolved directly
    // to its largest feasible grid value (the objective is non-decreasing in
    // it and it appears in no other constraint).
    auto search_t = [&](auto&& self, int axis, double budget_left, double cur_min) -> void {
        if (cur_min <= best.objective) return;  // min can only drop further
        const auto aa = static_cast<std::size_t>(axis);
        const double bound = std::min(cap[aa], budget_left);
        if (axis == M - 1) {
            const auto tm = largest_at_most(t_vals[aa], bound);
            if (!tm) return;
            const double obj = std::min(cur_min, *tm * rate[aa]);
            if (obj > best.objective) {
                t[aa] = *tm;
                best.feasible = true;
                best.objective = obj;
                best.best.t = t;
                best.best.p = p;
            }
            return;
        }
        for (double tm : t_vals[aa]) {
            if (tm > bound) break;
            t[aa] = tm;
            self(self, axis + 1, budget_left - tm, std::min(cur_min, tm * rate[aa]));
        }
    };

    // Odometer over the power axes.
    std::vector<int> pi(static_cast<std::size_t>(M), 0);
    while (true) {
        for (int m = 0; m < M; ++m) {
            const auto mm = static_cast<std::size_t>(m);
            p[mm] = p_vals[mm][static_cast<std::size_t>(pi[mm])];
        }
        if (crb_ok()) {
            for (int m = 0; m < M; ++m) {
                const auto mm = static_cast<std::size_t>(m);
                rate[mm] = prm.bandwidth * std::log2(1.0 + p[mm] * sc.h_bs_user[mm] / prm.sigma2);
            }
            for (double t0 : t0_vals) {
                const double budget = prm.t_max - t0;
                if (budget <= 0) break;
                double saved_t0_objective = best.objective;
                for (int m = 0; m < M; ++m) {
                    const auto mm = static_cast<std::size_t>(m);
                    cap[mm] = harvested_energy(t0, prm.p0, prm.zeta[mm], sc.h_bs_user[mm]) / p[mm];
                }
                search_t(search_t, 0, budget, std::numeric_limits<double>::infinity());
                if (best.objective > saved_t0_objective) best.best.t0 = t0;
            }
        }
        int axis = M - 1;
        while (axis >= 0 && ++pi[static_cast<std::size_t>(axis)] ==
                                static_cast<int>(p_vals[static_cast<std::size_t>(axis)].size())) {
            pi[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }

    if (!best.feasible) best.objective = 0.0;
    return best;
}

GridSpec default_grid(const Scenario& sc, const SensingTables& tables, int points_per_axis) {
    const auto& prm = sc.params;
    const int M = prm.num_users;

    // Smallest uniform power scale satisfying every CRB constraint, found by
    // a log-spaced scan. A single user may sit far below that uniform level
    // when others compensate, so the per-user axes extend three decades
    // further down; the zoom stages of grid_search_refine recover precision.
    double tau_min = -1.0;
    constexpr int kScan = 512;
    for (int i = 0; i <= kScan; ++i) {
        const double tau = std::pow(10.0, -6.0 + 6.0 * i / kScan);
        const std::vector<double> p(static_cast<std::size_t>(M), tau * prm.p_max);
        bool ok = true;
        for (int n = 0; n < prm.num_targets && ok; ++n)
            ok = fn_value(p, tables, prm.eta, prm.p0, n) <= 0.0;
        if (ok) {
            tau_min = tau;
            break;
        }
    }
    const double p_lo =
        (tau_min > 0) ? std::max(tau_min * 1e-3, 1e-8) * prm.p_max : 1e-6 * prm.p_max;

    GridSpec g;
    g.t0 = {points_per_axis, prm.t_max / points_per_axis, prm.t_max};
    for (int m = 0; m < M; ++m) {
        const auto mm = static_cast<std::size_t>(m);
        const double e_max = prm.zeta[mm] * sc.h_bs_user[mm] * prm.p0 * prm.t_max;
        const double t_hi = std::min(prm.t_max, e_max / p_lo);
        g.t.push_back({points_per_axis, t_hi * 1e-6, t_hi});
        g.p.push_back({points_per_axis, p_lo, prm.p_max});
    }
    return g;
}

namespace {

// Trust-region style zoom: each stage re-grids a window centered on the
// incumbent, shrinking the half-width by a fixed factor so the incumbent
// can still travel across the base ranges while the mesh tightens.
OracleResult zoom_schedule(const Scenario& sc, const SensingTables& tables, const GridSpec& base,
                           int stages, OracleResult best, double start_scale) {
    constexpr double kShrink = 0.7;
    double scale = start_scale;
    for (int stage = 1; stage < stages && best.feasible; ++stage, scale *= kShrink) {
        auto window_linear = [&](const AxisSpec& bounds, double center) {
            AxisSpec out = bounds;
            const double half = 0.5 * (bounds.hi - bounds.lo) * scale;
            out.lo = std::max(bounds.lo, center - half);
            out.hi = std::min(bounds.hi, center + half);
            if (!(out.hi > out.lo)) out = {bounds.count, center, center * (1.0 + 1e-12)};
            return out;
        };
        auto window_log = [&](const AxisSpec& bounds, double center) {
            AxisSpec out = bounds;
            const double half = std::pow(bounds.hi / bounds.lo, 0.5 * scale);
            out.lo = std::max(bounds.lo, center / half);
            out.hi = std::min(bounds.hi, center * half);
            if (!(out.hi > out.lo)) out = {bounds.count, center, center * (1.0 + 1e-12)};
            return out;
        };
        GridSpec grid = base;
        grid.t0 = window_linear(base.t0, best.best.t0);
        for (std::size_t m = 0; m < base.t.size(); ++m) {
            grid.t[m] = window_log(base.t[m], best.best.t[m]);
            grid.p[m] = window_log(base.p[m], best.best.p[m]);
        }
        const OracleResult refined = grid_search_solve(sc, tables, grid);
        if (refined.feasible && refined.objective > best.objective) best = refined;
    }
    return best;
}

}  // namespace

OracleResult grid_search_refine(const Scenario& sc, const SensingTables& tables,
                                const GridSpec& base, int stages) {
    OracleResult coarse = grid_search_solve(sc, tables, base);
    OracleResult best = zoom_schedule(sc, tables, base, stages, coarse, 0.7);
    // The min-throughput landscape has ridge basins distinguished by which
    // user carries the sensing-power load; restart the zoom with each user's
    // power pushed across a ladder of decades to hop between them. A single
    // user has no load to shed, so restarts only matter for M >= 2.
    if (best.feasible && base.p.size() > 1) {
        for (std::size_t m = 0; m < base.p.size(); ++m) {
            for (double factor : {1e-4, 1e-2, 1e2, 1e4}) {
                OracleResult seed = best;
                seed.best.p[m] =
                    std::clamp(seed.best.p[m] * factor, base.p[m].lo, base.p[m].hi);
                seed.objective = coarse.objective;
                const OracleResult alt = zoom_schedule(sc, tables, base, stages, seed, 0.25);
                if (alt.objective > best.objective) best = alt;
            }
        }
    }
    return best;
}

double finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& f,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& analytic_grad,
                         const Eigen::VectorXd& point, double h) {
    if (!(h > 0)) throw std::invalid_argument("finite_diff_check: h must be positive");
    const Eigen::VectorXd grad = analytic_grad(point);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        Eigen::VectorXd hi = point;
        Eigen::VectorXd lo = point;
        hi[i] += h;
        lo[i] -= h;
        const double fd = (f(hi) - f(lo)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(grad[i])));
    }
    return worst;
}

}  // namespace wptisac
