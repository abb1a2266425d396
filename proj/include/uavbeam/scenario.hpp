#ifndef UAVBEAM_SCENARIO_HPP
#define UAVBEAM_SCENARIO_HPP

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "uavbeam/numerics.hpp"

namespace uavbeam {

struct Location {
    double x = 0.0;  // m
    double y = 0.0;  // m
};

struct Velocity {
    double amplitude = 0.0;  // m per slot
    double heading = 0.0;    // rad
};

// Scenario constants. Units are SI except the speed bounds, which are in
// meters per slot (the slot duration is already folded in; the m/s view is
// amplitude / delta_t).
struct ScenarioConfig {
    int m_tx = 16;              // UAV array elements
    int n_rx = 8;               // UE array elements
    double f_c = 30.0e9;        // carrier, Hz
    double c_prop = 3.0e8;      // propagation speed, m/s
    double p_t = 0.1;           // transmit power, W (20 dBm)
    double sigma2 = 1.0e-12;    // noise power, W (-90 dBm)
    double delta_t = 0.02;      // slot duration, s
    int k_slots = 200;          // episode length, slots
    int window_l = 20;          // predictor history length
    Location ue_pos{0.0, 0.0};
    double speed_lo = 0.4;      // m per slot
    double speed_hi = 0.7;      // m per slot
    double heading_lo = -std::numbers::pi / 6.0;  // rad
    double heading_hi = std::numbers::pi / 6.0;   // rad
    double sigma_v = 0.01;      // per-slot disturbance std-dev, m
    Location uav_start{15.0, 15.0};
    std::uint64_t seed = 1;
};

/// Throws ConfigError if any invariant fails (counts >= 1, positive powers,
/// ordered bounds, window_l >= 2 < k_slots, ...).
void validate(const ScenarioConfig& cfg);

/// Parse a JSON document whose keys exactly match ScenarioConfig field names
/// (locations as [x, y] arrays). Missing keys keep defaults; unknown keys are
/// rejected with a ConfigError listing them. An optional "train" object is
/// handled by the training side and ignored here.
ScenarioConfig load_scenario_config(const std::string& json_text);
ScenarioConfig load_scenario_config_file(const std::string& path);

/// FNV-1a over the canonical field encoding; identifies config+seed.
std::uint64_t config_hash(const ScenarioConfig& cfg);

struct Trajectory {
    std::vector<Location> locations;
    std::uint64_t config_hash = 0;
};

struct TrajectoryWindow {
    std::vector<Location> columns;  // chronological, length window_l
    int target_index = 0;           // the slot being predicted
};

/// Per-slot velocity draw: amplitude ~ U(speed_lo, speed_hi), heading ~
/// U(heading_lo, heading_hi). Fresh draws every slot.
Velocity draw_velocity(RandomSource& rng, const ScenarioConfig& cfg);

/// One motion-model step: u + amplitude * [cos heading, sin heading] +
/// disturbance, disturbance ~ N(0, sigma_v^2 I). Draw order: amplitude,
/// heading, then the Gaussian pair.
Location step(const Location& u_prev, RandomSource& rng, const ScenarioConfig& cfg);

/// k_slots locations starting at cfg.uav_start, stepped with cfg.seed.
/// Throws NumericalError if the UAV comes within 0.5 m of the UE.
Trajectory generate_trajectory(const ScenarioConfig& cfg);

/// Angle of u relative to ue: arccos((u.x - ue.x) / ||u - ue||), in [0, pi].
/// Throws NumericalError on coincident points.
double relative_angle(const Location& u, const Location& ue);

/// The l most recent locations before slot k: locations[k-l .. k-1].
/// Throws std::out_of_range if k < l or k >= size.
TrajectoryWindow window(const Trajectory& traj, int k, int l);

}  // namespace uavbeam

#endif
