#include "wptisac/reformulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace wptisac {

LogPoint to_log_domain(const Allocation& alloc) {
    if (alloc.t0 <= 0) throw std::domain_error("to_log_domain: t0 must be positive");
    LogPoint lp;
    lp.t0 = alloc.t0;
    lp.u.reserve(alloc.t.size());
    lp.v.reserve(alloc.p.size());
    for (double tm : alloc.t) {
        if (tm <= 0) throw std::domain_error("to_log_domain: durations must be positive");
        lp.u.push_back(std::log(tm));
    }
    for (double pm : alloc.p) {
        if (pm <= 0) throw std::domain_error("to_log_domain: powers must be positive");
        lp.v.push_back(std::log(pm));
    }
    return lp;
}

Allocation from_log_domain(const LogPoint& point) {
    if (point.t0 <= 0) throw std::domain_error("from_log_domain: t0 must be positive");
    Allocation a;
    a.t0 = point.t0;
    a.t.reserve(point.u.size());
    a.p.reserve(point.v.size());
    for (double um : point.u) a.t.push_back(std::exp(um));
    for (double vm : point.v) a.p.push_back(std::exp(vm));
    return a;
}

namespace {
const double kLogLn2 = std::log(std::numbers::ln2);
}

double log_throughput(double u, double v, double h_0m, double sigma2, double bandwidth) {
    const double w = (h_0m / sigma2) * std::exp(v);
    // log(log2(1+w)) = log(log1p(w)) - log(ln 2); the inner log1p is > 0 for w > 0.
    return u + std::log(bandwidth) + std::log(std::log1p(w)) - kLogLn2;
}

LogThroughputDerivs log_throughput_derivs(double u, double v, double h_0m, double sigma2,
                                          double bandwidth) {
    (void)u;
    (void)bandwidth;
    const double w = (h_0m / sigma2) * std::exp(v);
    const double l = std::log1p(w);
    const double denom = (1.0 + w) * l;
    LogThroughputDerivs d;
    d.du = 1.0;
    d.dv = w / denom;
    d.dvv = w * (l - w) / (denom * denom);  // l <= w, so dvv <= 0
    return d;
}

double ftilde(const std::vector<double>& v, const SensingTables& tables, double eta, double p0,
              int n) {
    std::vector<double> p(v.size());
    for (std::size_t m = 0; m < v.size(); ++m) p[m] = std::exp(v[m]);
    return fn_value(p, tables, eta, p0, n);
}

double ftilde_linearized(const std::vector<double>& v, const std::vector<double>& v_r,
                         const SensingTables& tables, double eta, double p0, int n) {
    const int m_users = tables.num_users;
    if (static_cast<int>(v.size()) != m_users || static_cast<int>(v_r.size()) != m_users)
        throw std::invalid_argument("ftilde_linearized: wrong vector length");
    const auto nn = static_cast<std::size_t>(n);

    double value = tables.mu[nn];
    for (int m = 0; m < m_users; ++m) {
        const auto mm = static_cast<std::size_t>(m);
        value += tables.alpha[mm][nn] * std::exp(v[mm]);
        value -= eta * p0 * tables.phi[mm][nn] * std::exp(v_r[mm]) * (1.0 + v[mm] - v_r[mm]);
    }
    double quad = 0.0;
    for (int i = 0; i < m_users; ++i) {
        for (int j = 0; j < m_users; ++j) {
            const auto ii = static_cast<std::size_t>(i);
            const auto jj = static_cast<std::size_t>(j);
            quad += tables.beta[ii][jj][nn] * std::exp(v_r[ii] + v_r[jj]) *
                    (1.0 + (v[ii] - v_r[ii]) + (v[jj] - v_r[jj]));
        }
    }
    return value - 0.5 * eta * quad;
}

namespace {

Eigen::VectorXd zero_vec(int dim) { return Eigen::VectorXd::Zero(dim); }
Eigen::MatrixXd zero_mat(int dim) { return Eigen::MatrixXd::Zero(dim, dim); }

}  // namespace

Subproblem build_subproblem(const Scenario& sc, const SensingTables& tables,
                            const std::vector<double>& v_r) {
    const int M = sc.params.num_users;
    const int N = sc.params.num_targets;
    if (static_cast<int>(v_r.size()) != M)
        throw std::invalid_argument("build_subproblem: expansion point has wrong length");

    const VariableLayout lay{M};
    Subproblem sp;
    sp.dim = lay.dim();
    sp.objective_index = lay.s();

    const double sigma2 = sc.params.sigma2;
    const double W = sc.params.bandwidth;
    const double t_max = sc.params.t_max;
    const double log_p_max = std::log(sc.params.p_max);

    // s - log R~_m(u_m, v_m) <= 0
    for (int m = 0; m < M; ++m) {
        const double h = sc.h_bs_user[static_cast<std::size_t>(m)];
        const int iu = lay.u(m);
        const int iv = lay.v(m);
        const int is = lay.s();
        sp.residuals.push_back(Residual{
            "epigraph_" + std::to_string(m + 1),
            [=](const Eigen::VectorXd& x) {
                return x[is] - log_throughput(x[iu], x[iv], h, sigma2, W);
            },
            [=, dim = sp.dim](const Eigen::VectorXd& x) {
                auto d = log_throughput_derivs(x[iu], x[iv], h, sigma2, W);
                Eigen::VectorXd g = zero_vec(dim);
                g[is] = 1.0;
                g[iu] = -d.du;
                g[iv] = -d.dv;
                return g;
            },
            [=, dim = sp.dim](const Eigen::VectorXd& x) {
                auto d = log_throughput_derivs(x[iu], x[iv], h, sigma2, W);
                Eigen::MatrixXd hess = zero_mat(dim);
                hess(iv, iv) = -d.dvv;
                return hess;
            }});
    }

    // t0 + sum e^{u_m} - T_max <= 0
    sp.residuals.push_back(Residual{
        "time_budget",
        [=](const Eigen::VectorXd& x) {
            double s = x[lay.t0()] - t_max;
            for (int m = 0; m < M; ++m) s += std::exp(x[lay.u(m)]);
            return s;
        },
        [=, dim = sp.dim](const Eigen::VectorXd& x) {
            Eigen::VectorXd g = zero_vec(dim);
            g[lay.t0()] = 1.0;
            for (int m = 0; m < M; ++m) g[lay.u(m)] = std::exp(x[lay.u(m)]);
            return g;
        },
        [=, dim = sp.dim](const Eigen::VectorXd& x) {
            Eigen::MatrixXd h = zero_mat(dim);
            for (int m = 0; m < M; ++m) h(lay.u(m), lay.u(m)) = std::exp(x[lay.u(m)]);
            return h;
        }});

    // v_m - log P_max <= 0
    for (int m = 0; m < M; ++m) {
        const int iv = lay.v(m);
        sp.residuals.push_back(Residual{
            "power_cap_" + std::to_string(m + 1),
            [=](const Eigen::VectorXd& x) { return x[iv] - log_p_max; },
            [=, dim = sp.dim](const Eigen::VectorXd&) {
                Eigen::VectorXd g = zero_vec(dim);
                g[iv] = 1.0;
                return g;
            },
            [dim = sp.dim](const Eigen::VectorXd&) { return zero_mat(dim); }});
    }

    // u_m + v_m - log(zeta_m h_0m p0) - log t0 <= 0
    for (int m = 0; m < M; ++m) {
        const double log_rate = std::log(sc.params.zeta[static_cast<std::size_t>(m)] *
                                         sc.h_bs_user[static_cast<std::size_t>(m)] * sc.params.p0);
        const int iu = lay.u(m);
        const int iv = lay.v(m);
        const int it = lay.t0();
        sp.residuals.push_back(Residual{
            "energy_" + std::to_string(m + 1),
            [=](const Eigen::VectorXd& x) {
                return x[iu] + x[iv] - log_rate - std::log(x[it]);
            },
            [=, dim = sp.dim](const Eigen::VectorXd& x) {
                Eigen::VectorXd g = zero_vec(dim);
                g[iu] = 1.0;
                g[iv] = 1.0;
                g[it] = -1.0 / x[it];
                return g;
            },
            [=, dim = sp.dim](const Eigen::VectorXd& x) {
                Eigen::MatrixXd h = zero_mat(dim);
                h(it, it) = 1.0 / (x[it] * x[it]);
                return h;
            }});
    }

    // Linearized CRB constraints: sum alpha e^{v_m} + affine(v) <= 0.
    // The majorant's negative terms collapse into a constant plus a linear
    // form in v with coefficients evaluated at the expansion point.
    const double eta = sc.params.eta;
    const double p0 = sc.params.p0;
    for (int n = 0; n < N; ++n) {
        const auto nn = static_cast<std::size_t>(n);
        std::vector<double> exp_coef(static_cast<std::size_t>(M));
        std::vector<double> lin_coef(static_cast<std::size_t>(M), 0.0);
        double constant = tables.mu[nn];
        for (int m = 0; m < M; ++m) {
            const auto mm = static_cast<std::size_t>(m);
            exp_coef[mm] = tables.alpha[mm][nn];
            const double phi_term = eta * p0 * tables.phi[mm][nn] * std::exp(v_r[mm]);
            lin_coef[mm] -= phi_term;
            constant -= phi_term * (1.0 - v_r[mm]);
            for (int j = 0; j < M; ++j) {
                const auto jj = static_cast<std::size_t>(j);
                const double beta_term =
                    eta * tables.beta[mm][jj][nn] * std::exp(v_r[mm] + v_r[jj]);
                lin_coef[mm] -= beta_term;  // symmetric pair contribution
                constant -= 0.5 * beta_term * (1.0 - v_r[mm] - v_r[jj]);
            }
        }
        sp.residuals.push_back(Residual{
            "crb_" + std::to_string(n + 1),
            [=](const Eigen::VectorXd& x) {
                double s = constant;
                for (int m = 0; m < M; ++m) {
                    const auto mm = static_cast<std::size_t>(m);
                    s += exp_coef[mm] * std::exp(x[lay.v(m)]) + lin_coef[mm] * x[lay.v(m)];
                }
                return s;
            },
            [=, dim = sp.dim](const Eigen::VectorXd& x) {
                Eigen::VectorXd g = zero_vec(dim);
                for (int m = 0; m < M; ++m) {
                    const auto mm = static_cast<std::size_t>(m);
                    g[lay.v(m)] = exp_coef[mm] * std::exp(x[lay.v(m)]) + lin_coef[mm];
                }
                return g;
            },
            [=, dim = sp.dim](const Eigen::VectorXd& x) {
                Eigen::MatrixXd h = zero_mat(dim);
                for (int m = 0; m < M; ++m) {
                    const auto mm = static_cast<std::size_t>(m);
                    h(lay.v(m), lay.v(m)) = exp_coef[mm] * std::exp(x[lay.v(m)]);
                }
                return h;
            }});
    }

    // t0 > 0 needs no explicit residual: every energy-causality residual
    // contains -log t0 and the line search rejects points outside its domain.

    return sp;
}

double throughput_bits(double t_m, double p_m, double h_0m, double sigma2, double bandwidth) {
    return t_m * bandwidth * std::log2(1.0 + p_m * h_0m / sigma2);
}

std::vector<double> throughput_per_user(const Allocation& alloc, const Scenario& sc) {
    std::vector<double> r(alloc.t.size());
    for (std::size_t m = 0; m < alloc.t.size(); ++m)
        r[m] = throughput_bits(alloc.t[m], alloc.p[m], sc.h_bs_user[m], sc.params.sigma2,
                               sc.params.bandwidth);
    return r;
}

double min_throughput(const Allocation& alloc, const Scenario& sc) {
    const auto r = throughput_per_user(alloc, sc);
    double best = r.empty() ? 0.0 : r[0];
    for (double x : r) best = std::min(best, x);
    return best;
}

double allocation_violation(const Allocation& alloc, const Scenario& sc,
                            const SensingTables& tables) {
    const auto& p = sc.params;
    double worst = 0.0;
    auto rel = [&](double violation, double scale) {
        worst = std::max(worst, violation / std::max(1.0, std::abs(scale)));
    };

    if (alloc.t0 <= 0) return std::numeric_limits<double>::infinity();
    double total = alloc.t0;
    for (std::size_t m = 0; m < alloc.t.size(); ++m) {
        if (alloc.t[m] <= 0 || alloc.p[m] <= 0) return std::numeric_limits<double>::infinity();
        total += alloc.t[m];
        rel(alloc.p[m] - p.p_max, p.p_max);
        const double e = harvested_energy(alloc.t0, p.p0, p.zeta[m], sc.h_bs_user[m]);
        rel((alloc.t[m] * alloc.p[m] - e) / e, 1.0);
    }
    rel(total - p.t_max, p.t_max);
    for (int n = 0; n < p.num_targets; ++n) {
        const double f = fn_value(alloc.p, tables, p.eta, p.p0, n);
        rel(f, tables.mu[static_cast<std::size_t>(n)]);
    }
    return worst;
}

}  // namespace wptisac
