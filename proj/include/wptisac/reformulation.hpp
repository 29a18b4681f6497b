#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wptisac/sensing.hpp"

namespace wptisac {

/// Decision variables in the natural domain.
struct Allocation {
    double t0 = 0.0;        // WPT duration [s]
    std::vector<double> t;  // per-user durations [s]
    std::vector<double> p;  // per-user powers [W]
};

/// Decision variables in the transformed domain: u = log t, v = log p,
/// with t0 kept in the natural domain.
struct LogPoint {
    double t0 = 0.0;
    std::vector<double> u;
    std::vector<double> v;
};

LogPoint to_log_domain(const Allocation& alloc);
Allocation from_log_domain(const LogPoint& point);

// Natural log of the throughput t_m W log2(1 + h e^v / sigma2):
//   u + log W + log(log2(1 + (h/sigma2) e^v)).
// Strictly increasing in u and v, jointly concave.
double log_throughput(double u, double v, double h_0m, double sigma2, double bandwidth);

struct LogThroughputDerivs {
    double du = 0.0;   // always 1
    double dv = 0.0;   // in (0, +inf)
    double dvv = 0.0;  // <= 0
};

LogThroughputDerivs log_throughput_derivs(double u, double v, double h_0m, double sigma2,
                                          double bandwidth);

// F_n evaluated at p = exp(v).
double ftilde(const std::vector<double>& v, const SensingTables& tables, double eta, double p0,
              int n);

// Convex majorant of ftilde: the bilinear exponentials in the negative terms
// are replaced by first-order expansions at v_r. Tangent at v = v_r and a
// global upper bound on ftilde.
double ftilde_linearized(const std::vector<double>& v, const std::vector<double>& v_r,
                         const SensingTables& tables, double eta, double p0, int n);

/// One smooth constraint residual g(x) <= 0 with analytic derivatives.
struct Residual {
    std::string name;
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

/// A smooth convex program: maximize x[objective_index] subject to all
/// residuals <= 0. Residual order for the standard layout: M epigraph,
/// 1 time budget, M power cap, M energy causality, N linearized CRB.
struct Subproblem {
    int dim = 0;
    int objective_index = 0;
    std::vector<Residual> residuals;
};

// Variable layout: x = [t0, u_1..u_M, v_1..v_M, s].
struct VariableLayout {
    int num_users = 0;
    int t0() const { return 0; }
    int u(int m) const { return 1 + m; }
    int v(int m) const { return 1 + num_users + m; }
    int s() const { return 1 + 2 * num_users; }
    int dim() const { return 2 + 2 * num_users; }
};

// Builds the convex subproblem linearized at v_r (epigraph form of the
// max-min log-throughput objective with an auxiliary scalar s).
Subproblem build_subproblem(const Scenario& scenario, const SensingTables& tables,
                            const std::vector<double>& v_r);

// Per-user throughput in bits and the (P1) feasibility audit.
double throughput_bits(double t_m, double p_m, double h_0m, double sigma2, double bandwidth);
std::vector<double> throughput_per_user(const Allocation& alloc, const Scenario& scenario);
double min_throughput(const Allocation& alloc, const Scenario& scenario);

// Largest relative violation of the (P1) constraints (0 when feasible):
// positivity, time budget, power caps, energy causality, F_n <= 0.
double allocation_violation(const Allocation& alloc, const Scenario& scenario,
                            const SensingTables& tables);

}  // namespace wptisac
