#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace wptisac {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

double distance(const Vec2& a, const Vec2& b);

/// All physical and algorithmic parameters of one problem instance.
struct SystemParams {
    int num_users = 10;                  // M
    int num_targets = 10;                // N
    double p0 = 10.0;                    // BS transmit power [W]
    double p_max = 2.0;                  // per-user power cap [W]
    double t_max = 10.0;                 // total time budget [s]
    double sigma2 = 1e-10;               // receiver noise power [W] (-70 dBm)
    double bandwidth = 1e6;              // W [Hz]
    double eta = 5e-2;                   // CRB accuracy threshold [m^2]
    std::vector<double> zeta;            // energy conversion efficiency, length M
    double kappa = 1e-3;                 // path-loss constant
    double nu = 2.5;                     // path-loss exponent
    double c = 3e8;                      // speed of light [m/s]
    double deploy_radius = 10.0;         // [m]
    double lambda_th = 1e-5;             // SCA stopping threshold

    // Fills zeta with 0.7 entries when empty, then checks all invariants.
    void normalize_and_validate();
    void validate() const;
};

/// One concrete problem instance: geometry plus channel realizations.
struct Scenario {
    SystemParams params;
    std::uint64_t seed = 0;
    Vec2 bs_pos{0.0, 0.0};                         // x_0
    std::vector<Vec2> user_pos;                    // x_m, length M
    std::vector<Vec2> target_pos;                  // q_n, length N
    std::vector<double> h_bs_user;                 // h_{0,m}, length M
    std::vector<std::vector<double>> h_to_target;  // h_{m,n}, (M+1) x N, row 0 = BS

    void validate() const;
};

// Distance-dependent path-loss channel: h = z * kappa * d^(-nu).
double channel_gain(double d, double z, double kappa, double nu);

// E_m(t0) = zeta_m * h_0m * t0 * p0.
double harvested_energy(double t0, double p0, double zeta_m, double h_0m);

// Deterministic scenario construction. Stream order: user positions, target
// positions, then fading draws (h_bs_user, then h_to_target row-major with
// row 0 = BS). Node pairs closer than 0.1 m are rejection-resampled.
Scenario generate_scenario(std::uint64_t seed, const SystemParams& params);

void to_json(nlohmann::json& j, const SystemParams& p);
void from_json(const nlohmann::json& j, SystemParams& p);
void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

namespace detail {

// Portable seeded RNG with explicitly documented draw semantics, so a fixed
// seed reproduces the same scenario on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Unit-mean exponential via inverse CDF (Rayleigh power gain).
    double exponential() { return -std::log1p(-uniform()); }

  private:
    std::mt19937_64 eng_;
};

// Uniform point on the disc of given radius centered at the origin.
// Consumes exactly two uniform draws (radius first, then angle).
Vec2 sample_disc(Rng& rng, double radius);

}  // namespace detail

}  // namespace wptisac
