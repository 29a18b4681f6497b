#include "wptisac/sensing.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wptisac {

namespace {
void check_separated(const Vec2& a, const Vec2& target, const char* what) {
    if (distance(a, target) <= 0.0) throw std::domain_error(std::string("coincident ") + what);
}
}  // namespace

double round_trip_distance(const Vec2& tx_pos, const Vec2& bs_pos, const Vec2& target_pos,
                           RangeMode mode) {
    check_separated(bs_pos, target_pos, "BS/target");
    if (mode == RangeMode::Monostatic) return 2.0 * distance(bs_pos, target_pos);
    check_separated(tx_pos, target_pos, "transmitter/target");
    return distance(tx_pos, target_pos) + distance(bs_pos, target_pos);
}

std::pair<double, double> range_gradient(const Vec2& tx_pos, const Vec2& bs_pos,
                                         const Vec2& target_pos, RangeMode mode) {
    check_separated(bs_pos, target_pos, "BS/target");
    const double d0 = distance(bs_pos, target_pos);
    const double ux0 = (bs_pos.x - target_pos.x) / d0;
    const double uy0 = (bs_pos.y - target_pos.y) / d0;
    if (mode == RangeMode::Monostatic) return {-2.0 * ux0, -2.0 * uy0};
    check_separated(tx_pos, target_pos, "transmitter/target");
    const double dm = distance(tx_pos, target_pos);
    const double uxm = (tx_pos.x - target_pos.x) / dm;
    const double uym = (tx_pos.y - target_pos.y) / dm;
    return {-uxm - ux0, -uym - uy0};
}

double sensing_coefficient(double bandwidth, double h, double sigma2, double c) {
    if (bandwidth <= 0 || h <= 0 || sigma2 <= 0 || c <= 0)
        throw std::invalid_argument("sensing_coefficient: all inputs must be positive");
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    return 8.0 * pi2 * bandwidth * bandwidth * h / (sigma2 * c * c);
}

SensingTables build_tables(const Scenario& sc) {
    const int m_users = sc.params.num_users;
    const int n_targets = sc.params.num_targets;
    const auto mu_sz = static_cast<std::size_t>(m_users);
    const auto nt_sz = static_cast<std::size_t>(n_targets);

    SensingTables t;
    t.num_users = m_users;
    t.num_targets = n_targets;
    t.X.assign(mu_sz + 1, std::vector<double>(nt_sz));
    t.Y.assign(mu_sz + 1, std::vector<double>(nt_sz));
    t.K.assign(mu_sz + 1, std::vector<double>(nt_sz));
    t.alpha.assign(mu_sz, std::vector<double>(nt_sz));
    t.mu.assign(nt_sz, 0.0);
    t.beta.assign(mu_sz, std::vector<std::vector<double>>(mu_sz, std::vector<double>(nt_sz, 0.0)));
    t.phi.assign(mu_sz, std::vector<double>(nt_sz));

    for (int n = 0; n < n_targets; ++n) {
        const Vec2& q = sc.target_pos[static_cast<std::size_t>(n)];
        for (int m = 0; m <= m_users; ++m) {
            const bool is_bs = (m == 0);
            const Vec2 tx = is_bs ? sc.bs_pos : sc.user_pos[static_cast<std::size_t>(m - 1)];
            const auto [gx, gy] = range_gradient(
                tx, sc.bs_pos, q, is_bs ? RangeMode::Monostatic : RangeMode::Bistatic);
            t.X[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)] = gx;
            t.Y[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)] = gy;
            t.K[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)] = sensing_coefficient(
                sc.params.bandwidth,
                sc.h_to_target[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)],
                sc.params.sigma2, sc.params.c);
        }

        const auto& X = t.X;
        const auto& Y = t.Y;
        const auto& K = t.K;
        const auto nn = static_cast<std::size_t>(n);
        t.mu[nn] = sc.params.p0 * K[0][nn] * (X[0][nn] * X[0][nn] + Y[0][nn] * Y[0][nn]);
        for (int m = 1; m <= m_users; ++m) {
            const auto mm = static_cast<std::size_t>(m);
            t.alpha[mm - 1][nn] = K[mm][nn] * (X[mm][nn] * X[mm][nn] + Y[mm][nn] * Y[mm][nn]);
            const double cross0 = X[0][nn] * Y[mm][nn] - X[mm][nn] * Y[0][nn];
            t.phi[mm - 1][nn] = K[0][nn] * K[mm][nn] * cross0 * cross0;
        }
        // One evaluation per unordered pair keeps the symmetry bit-exact.
        for (int i = 1; i <= m_users; ++i) {
            for (int j = i + 1; j <= m_users; ++j) {
                const auto ii = static_cast<std::size_t>(i);
                const auto jj = static_cast<std::size_t>(j);
                const double cross = X[ii][nn] * Y[jj][nn] - X[jj][nn] * Y[ii][nn];
                const double b = K[ii][nn] * K[jj][nn] * cross * cross;
                t.beta[ii - 1][jj - 1][nn] = b;
                t.beta[jj - 1][ii - 1][nn] = b;
            }
        }
    }
    return t;
}

Fim2x2 fim(std::span<const double> p, double p0, const SensingTables& t, int n) {
    if (static_cast<int>(p.size()) != t.num_users)
        throw std::invalid_argument("fim: power vector has wrong length");
    const auto nn = static_cast<std::size_t>(n);
    Fim2x2 j;
    for (int m = 0; m <= t.num_users; ++m) {
        const auto mm = static_cast<std::size_t>(m);
        const double pm = (m == 0) ? p0 : p[mm - 1];
        const double w = pm * t.K[mm][nn];
        j.a += w * t.X[mm][nn] * t.X[mm][nn];
        j.b += w * t.Y[mm][nn] * t.Y[mm][nn];
        j.c += w * t.X[mm][nn] * t.Y[mm][nn];
    }
    return j;
}

std::optional<double> crb_trace(const Fim2x2& j) {
    const double det = j.a * j.b - j.c * j.c;
    const double eps = 1e-12 * std::max(1.0, j.a * j.b);
    if (det <= eps) return std::nullopt;
    return (j.a + j.b) / det;
}

double fn_value(std::span<const double> p, const SensingTables& t, double eta, double p0, int n) {
    if (static_cast<int>(p.size()) != t.num_users)
        throw std::invalid_argument("fn_value: power vector has wrong length");
    const auto nn = static_cast<std::size_t>(n);
    double value = t.mu[nn];
    for (int m = 0; m < t.num_users; ++m) {
        const auto mm = static_cast<std::size_t>(m);
        value += t.alpha[mm][nn] * p[mm];
        value -= eta * p0 * t.phi[mm][nn] * p[mm];
    }
    double quad = 0.0;
    for (int i = 0; i < t.num_users; ++i) {
        for (int j = 0; j < t.num_users; ++j) {
            const auto ii = static_cast<std::size_t>(i);
            const auto jj = static_cast<std::size_t>(j);
            quad += t.beta[ii][jj][nn] * p[ii] * p[jj];
        }
    }
    return value - 0.5 * eta * quad;
}

void to_json(nlohmann::json& j, const SensingTables& t) {
    j = nlohmann::json{{"num_users", t.num_users}, {"num_targets", t.num_targets},
                       {"X", t.X},                 {"Y", t.Y},
                       {"K", t.K},                 {"alpha", t.alpha},
                       {"mu", t.mu},               {"beta", t.beta},
                       {"phi", t.phi}};
}

}  // namespace wptisac
