#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wptisac/reformulation.hpp"

namespace wptisac {

struct SolverConfig {
    // log-barrier path following
    double barrier_t_init = 1.0;
    double barrier_mult = 10.0;
    double gap_target = 1e-8;  // termination when 1/t_barrier <= gap_target

    // Newton with backtracking line search
    double newton_tol = 1e-9;  // on the squared Newton decrement / 2
    int newton_max_iters = 200;
    double armijo = 0.25;
    double backtrack = 0.5;

    // SCA outer loop
    double lambda_th = 1e-5;
    int max_outer_iters = 100;
    double t0_floor = 1e-9;

    void validate() const;
};

enum class SolveStatus { Converged, MaxIters, Infeasible };

std::string to_string(SolveStatus s);

struct SolveReport {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> objective_trace;  // min throughput [bits] per accepted iterate
    Allocation allocation;
    std::vector<double> throughput_per_user;  // [bits]
    std::vector<double> crb_per_target;       // [m^2]; -1 marks a singular FIM
    double timing_ms = 0.0;
    int iterations = 0;
};

// Barrier method over a strictly feasible start; throws std::runtime_error on
// a line-search stall or Newton iteration cap, std::invalid_argument when the
// start is not strictly interior.
Eigen::VectorXd solve_subproblem(const Subproblem& sp, const Eigen::VectorXd& start,
                                 const SolverConfig& config);

// Heuristic strictly feasible (P2) point: p near P_max with random fallback
// perturbations, then a time split that keeps every constraint strict.
// Returns nullopt when no CRB-feasible power vector is found.
std::optional<LogPoint> init_feasible(const Scenario& scenario, const SensingTables& tables,
                                      const SolverConfig& config);

// The SCA loop: linearize the CRB constraints at the incumbent, solve the
// convex subproblem, accept improving iterates until the relative improvement
// drops below lambda_th.
SolveReport sca_solve(const Scenario& scenario, const SolverConfig& config);

// Benchmark: one shared ISAC slot duration for all users (t_m = t).
SolveReport solve_equal_time(const Scenario& scenario, const SolverConfig& config);

// Benchmark: p_m = P_max fixed; the residual problem in (t0, t) is convex and
// solved with a single inner call.
SolveReport solve_max_power(const Scenario& scenario, const SolverConfig& config);

// timing_ms is serialized as 0 so repeated runs emit identical bytes.
void to_json(nlohmann::json& j, const SolveReport& r);

}  // namespace wptisac
