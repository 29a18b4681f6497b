#include "wptisac/scenario.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wptisac {

namespace {
constexpr double kMinSeparation = 0.1;  // meters, avoids d^(-nu) blowup
constexpr int kMaxRetriesPerNode = 10000;
constexpr double kMinFading = 1e-12;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

double distance(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

void SystemParams::normalize_and_validate() {
    if (zeta.empty() && num_users > 0) zeta.assign(static_cast<std::size_t>(num_users), 0.7);
    validate();
}

void SystemParams::validate() const {
    require(num_users >= 1, "num_users must be >= 1");
    require(num_targets >= 1, "num_targets must be >= 1");
    require(p0 > 0, "p0 must be positive");
    require(p_max > 0, "p_max must be positive");
    require(t_max > 0, "t_max must be positive");
    require(sigma2 > 0, "sigma2 must be positive");
    require(bandwidth > 0, "bandwidth must be positive");
    require(eta > 0, "eta must be positive");
    require(zeta.size() == static_cast<std::size_t>(num_users), "zeta must have length num_users");
    for (double z : zeta) require(z > 0 && z <= 1, "zeta entries must lie in (0, 1]");
    require(kappa > 0, "kappa must be positive");
    require(nu > 0, "nu must be positive");
    require(c > 0, "c must be positive");
    require(deploy_radius > 0, "deploy_radius must be positive");
    require(lambda_th > 0, "lambda_th must be positive");
}

void Scenario::validate() const {
    params.validate();
    const auto m = static_cast<std::size_t>(params.num_users);
    const auto n = static_cast<std::size_t>(params.num_targets);
    require(user_pos.size() == m, "user_pos has wrong length");
    require(target_pos.size() == n, "target_pos has wrong length");
    require(h_bs_user.size() == m, "h_bs_user has wrong length");
    require(h_to_target.size() == m + 1, "h_to_target must have M+1 rows");
    for (const auto& row : h_to_target) {
        require(row.size() == n, "h_to_target row has wrong length");
        for (double h : row) require(h > 0 && std::isfinite(h), "channel gains must be positive and finite");
    }
    for (double h : h_bs_user) require(h > 0 && std::isfinite(h), "channel gains must be positive and finite");
    for (const auto& q : target_pos) {
        require(distance(q, bs_pos) > 0, "target coincides with BS");
        for (const auto& x : user_pos) require(distance(q, x) > 0, "target coincides with a user");
    }
}

double channel_gain(double d, double z, double kappa, double nu) {
    if (d <= 0) throw std::domain_error("channel_gain: nonpositive distance");
    require(z >= 0, "channel_gain: negative fading coefficient");
    require(kappa > 0 && nu > 0, "channel_gain: kappa and nu must be positive");
    return z * kappa * std::pow(d, -nu);
}

double harvested_energy(double t0, double p0, double zeta_m, double h_0m) {
    require(t0 > 0, "harvested_energy: t0 must be positive");
    require(p0 > 0, "harvested_energy: p0 must be positive");
    require(zeta_m > 0 && zeta_m <= 1, "harvested_energy: zeta out of (0, 1]");
    require(h_0m > 0, "harvested_energy: channel gain must be positive");
    return zeta_m * h_0m * t0 * p0;
}

namespace detail {

Vec2 sample_disc(Rng& rng, double radius) {
    const double r = radius * std::sqrt(rng.uniform());
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace detail

namespace {

// Draws one position at least kMinSeparation away from every node in `placed`.
Vec2 place_node(detail::Rng& rng, double radius, const std::vector<Vec2>& placed) {
    for (int attempt = 0; attempt < kMaxRetriesPerNode; ++attempt) {
        const Vec2 candidate = detail::sample_disc(rng, radius);
        bool ok = true;
        for (const auto& other : placed) {
            if (distance(candidate, other) < kMinSeparation) {
                ok = false;
                break;
            }
        }
        if (ok) return candidate;
    }
    throw std::runtime_error("generate_scenario: node placement retry cap exhausted");
}

double draw_fading(detail::Rng& rng) {
    for (int attempt = 0; attempt < kMaxRetriesPerNode; ++attempt) {
        const double z = rng.exponential();
        if (z > kMinFading) return z;
    }
    throw std::runtime_error("generate_scenario: fading retry cap exhausted");
}

}  // namespace

Scenario generate_scenario(std::uint64_t seed, const SystemParams& params) {
    SystemParams p = params;
    p.normalize_and_validate();

    Scenario sc;
    sc.params = p;
    sc.seed = seed;
    sc.bs_pos = {0.0, 0.0};

    detail::Rng rng(seed);

    std::vector<Vec2> placed{sc.bs_pos};
    sc.user_pos.reserve(static_cast<std::size_t>(p.num_users));
    for (int m = 0; m < p.num_users; ++m) {
        const Vec2 pos = place_node(rng, p.deploy_radius, placed);
        sc.user_pos.push_back(pos);
        placed.push_back(pos);
    }
    sc.target_pos.reserve(static_cast<std::size_t>(p.num_targets));
    for (int n = 0; n < p.num_targets; ++n) {
        const Vec2 pos = place_node(rng, p.deploy_radius, placed);
        sc.target_pos.push_back(pos);
        placed.push_back(pos);
    }

    sc.h_bs_user.reserve(static_cast<std::size_t>(p.num_users));
    for (int m = 0; m < p.num_users; ++m) {
        const double d = distance(sc.bs_pos, sc.user_pos[static_cast<std::size_t>(m)]);
        sc.h_bs_user.push_back(channel_gain(d, draw_fading(rng), p.kappa, p.nu));
    }

    sc.h_to_target.assign(static_cast<std::size_t>(p.num_users) + 1,
                          std::vector<double>(static_cast<std::size_t>(p.num_targets)));
    for (int m = 0; m <= p.num_users; ++m) {
        const Vec2 tx = (m == 0) ? sc.bs_pos : sc.user_pos[static_cast<std::size_t>(m - 1)];
        for (int n = 0; n < p.num_targets; ++n) {
            const double d = distance(tx, sc.target_pos[static_cast<std::size_t>(n)]);
            sc.h_to_target[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)] =
                channel_gain(d, draw_fading(rng), p.kappa, p.nu);
        }
    }

    sc.validate();
    return sc;
}

void to_json(nlohmann::json& j, const SystemParams& p) {
    j = nlohmann::json{{"num_users", p.num_users},
                       {"num_targets", p.num_targets},
                       {"p0", p.p0},
                       {"p_max", p.p_max},
                       {"t_max", p.t_max},
                       {"sigma2", p.sigma2},
                       {"bandwidth", p.bandwidth},
                       {"eta", p.eta},
                       {"zeta", p.zeta},
                       {"kappa", p.kappa},
                       {"nu", p.nu},
                       {"c", p.c},
                       {"deploy_radius", p.deploy_radius},
                       {"lambda_th", p.lambda_th}};
}

void from_json(const nlohmann::json& j, SystemParams& p) {
    j.at("num_users").get_to(p.num_users);
    j.at("num_targets").get_to(p.num_targets);
    j.at("p0").get_to(p.p0);
    j.at("p_max").get_to(p.p_max);
    j.at("t_max").get_to(p.t_max);
    j.at("sigma2").get_to(p.sigma2);
    j.at("bandwidth").get_to(p.bandwidth);
    j.at("eta").get_to(p.eta);
    j.at("zeta").get_to(p.zeta);
    j.at("kappa").get_to(p.kappa);
    j.at("nu").get_to(p.nu);
    j.at("c").get_to(p.c);
    j.at("deploy_radius").get_to(p.deploy_radius);
    j.at("lambda_th").get_to(p.lambda_th);
}

namespace {
nlohmann::json pos_to_json(const Vec2& v) { return nlohmann::json::array({v.x, v.y}); }
Vec2 pos_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
}  // namespace

void to_json(nlohmann::json& j, const Scenario& s) {
    nlohmann::json users = nlohmann::json::array();
    for (const auto& u : s.user_pos) users.push_back(pos_to_json(u));
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& t : s.target_pos) targets.push_back(pos_to_json(t));
    j = nlohmann::json{{"seed", s.seed},
                       {"params", s.params},
                       {"bs_pos", pos_to_json(s.bs_pos)},
                       {"user_pos", users},
                       {"target_pos", targets},
                       {"h_bs_user", s.h_bs_user},
                       {"h_to_target", s.h_to_target}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
    j.at("seed").get_to(s.seed);
    j.at("params").get_to(s.params);
    s.bs_pos = pos_from_json(j.at("bs_pos"));
    s.user_pos.clear();
    for (const auto& u : j.at("user_pos")) s.user_pos.push_back(pos_from_json(u));
    s.target_pos.clear();
    for (const auto& t : j.at("target_pos")) s.target_pos.push_back(pos_from_json(t));
    j.at("h_bs_user").get_to(s.h_bs_user);
    j.at("h_to_target").get_to(s.h_to_target);
    s.validate();
}

}  // namespace wptisac
