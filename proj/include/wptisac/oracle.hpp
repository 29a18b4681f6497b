#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wptisac/reformulation.hpp"
#include "wptisac/sensing.hpp"

namespace wptisac {

/// One grid axis. Linear spacing for times, log spacing for powers.
struct AxisSpec {
    int count = 2;
    double lo = 0.0;
    double hi = 0.0;
};

struct GridSpec {
    AxisSpec t0;
    std::vector<AxisSpec> t;  // per user
    std::vector<AxisSpec> p;  // per user
    double feas_tol = 0.0;    // relative slack on the CRB polynomial check
};

struct OracleResult {
    bool feasible = false;
    double objective = 0.0;  // min throughput [bits]
    Allocation best;
};

// Exhaustive search over the (t0, t, p) grid, keeping the best point that
// satisfies the time budget, power caps, energy causality, and F_n <= 0.
// Guarded to num_users <= 3. Independent of the log-domain solver: only the
// natural-domain formulas are used.
OracleResult grid_search_solve(const Scenario& scenario, const SensingTables& tables,
                               const GridSpec& grid);

// Instance-adapted default grid: t0 linear over (0, T_max], p log-spaced from
// just below the smallest CRB-feasible uniform power up to P_max, and t_m
// linear up to the largest slot the harvested energy can sustain.
GridSpec default_grid(const Scenario& scenario, const SensingTables& tables, int points_per_axis);

// Repeated grid_search_solve with ranges shrunk around the incumbent after
// each stage (clamped to the base ranges); returns the best stage result.
OracleResult grid_search_refine(const Scenario& scenario, const SensingTables& tables,
                                const GridSpec& base, int stages);

// Max per-coordinate relative error of `analytic_grad` against central finite
// differences of `f` with step h.
double finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& f,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& analytic_grad,
                         const Eigen::VectorXd& point, double h);

}  // namespace wptisac
