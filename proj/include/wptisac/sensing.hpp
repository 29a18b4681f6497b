#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "wptisac/scenario.hpp"

namespace wptisac {

enum class RangeMode { Bistatic, Monostatic };

/// Per-target precomputed geometry and coefficient tables.
///
/// Index convention throughout: transmitter index m runs over 0..M with
/// m = 0 the BS; target index n over 0..N-1. Tables restricted to users
/// (alpha, beta, phi) are indexed 0..M-1 for users 1..M.
struct SensingTables {
    int num_users = 0;    // M
    int num_targets = 0;  // N

    std::vector<std::vector<double>> X;      // (M+1) x N range-gradient x-components
    std::vector<std::vector<double>> Y;      // (M+1) x N range-gradient y-components
    std::vector<std::vector<double>> K;      // (M+1) x N sensing coefficients
    std::vector<std::vector<double>> alpha;  // M x N linear coefficients
    std::vector<double> mu;                  // N BS-only constants
    std::vector<std::vector<std::vector<double>>> beta;  // M x M x N quadratic coefficients
    std::vector<std::vector<double>> phi;    // M x N BS-cross coefficients
};

/// 2x2 Fisher information matrix [[A, C], [C, B]].
struct Fim2x2 {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    bool positive_definite(double eps = 0.0) const {
        return a > 0 && b > 0 && a * b - c * c > eps;
    }
};

// Bistatic: |x_m - q| + |x_0 - q|. Monostatic: 2 |x_0 - q| (tx_pos ignored).
double round_trip_distance(const Vec2& tx_pos, const Vec2& bs_pos, const Vec2& target_pos,
                           RangeMode mode);

// Gradient of the round-trip distance with respect to the target position.
// Component norms are bounded by 2 (sum of two unit vectors).
std::pair<double, double> range_gradient(const Vec2& tx_pos, const Vec2& bs_pos,
                                         const Vec2& target_pos, RangeMode mode);

// K = 8 pi^2 W^2 h / (sigma2 c^2).
double sensing_coefficient(double bandwidth, double h, double sigma2, double c);

SensingTables build_tables(const Scenario& scenario);

// FIM for target n at user powers p (length M); the BS term is weighted by p0.
Fim2x2 fim(std::span<const double> p, double p0, const SensingTables& tables, int n);

// tr(J^-1) = (A+B)/(AB-C^2), or nullopt when the FIM is numerically singular
// (AB - C^2 <= 1e-12 * max(1, A*B)).
std::optional<double> crb_trace(const Fim2x2& j);

// Polynomial form of A+B - eta*(AB-C^2) with the BS power separated out:
// F_n(p) = sum_m alpha p_m + mu - (eta/2) sum_ij beta p_i p_j - eta p0 sum_m phi p_m.
double fn_value(std::span<const double> p, const SensingTables& tables, double eta, double p0,
                int n);

void to_json(nlohmann::json& j, const SensingTables& t);

}  // namespace wptisac
