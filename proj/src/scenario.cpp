#include "uavbeam/scenario.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "uavbeam/errors.hpp"

namespace uavbeam {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinUeRange = 0.5;  // m; the path gain diverges at zero range

}  // namespace

void validate(const ScenarioConfig& cfg) {
    std::ostringstream bad;
    auto require = [&bad](bool ok, const char* what) {
        if (!ok) {
            bad << (bad.tellp() > 0 ? ", " : "") << what;
        }
    };
    require(cfg.m_tx >= 1, "m_tx >= 1");
    require(cfg.n_rx >= 1, "n_rx >= 1");
    require(cfg.f_c > 0.0, "f_c > 0");
    require(cfg.c_prop > 0.0, "c_prop > 0");
    require(cfg.p_t > 0.0, "p_t > 0");
    require(cfg.sigma2 > 0.0, "sigma2 > 0");
    require(cfg.delta_t > 0.0, "delta_t > 0");
    require(cfg.speed_lo >= 0.0 && cfg.speed_lo <= cfg.speed_hi, "0 <= speed_lo <= speed_hi");
    require(cfg.heading_lo >= -kPi && cfg.heading_lo <= cfg.heading_hi && cfg.heading_hi <= kPi,
            "-pi <= heading_lo <= heading_hi <= pi");
    require(cfg.sigma_v >= 0.0, "sigma_v >= 0");
    require(cfg.window_l >= 2, "window_l >= 2");
    require(cfg.k_slots > cfg.window_l, "k_slots > window_l");
    require(std::isfinite(cfg.uav_start.x) && std::isfinite(cfg.uav_start.y), "finite uav_start");
    require(std::isfinite(cfg.ue_pos.x) && std::isfinite(cfg.ue_pos.y), "finite ue_pos");
    if (bad.tellp() > 0) {
        throw ConfigError("invalid scenario config: " + bad.str());
    }
}

namespace {

Location parse_location(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError("config key '" + key + "' must be a [x, y] number pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

ScenarioConfig load_scenario_config(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config root must be a JSON object");
    }

    ScenarioConfig cfg;
    std::string unknown;
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "m_tx") cfg.m_tx = value.get<int>();
            else if (key == "n_rx") cfg.n_rx = value.get<int>();
            else if (key == "f_c") cfg.f_c = value.get<double>();
            else if (key == "c_prop") cfg.c_prop = value.get<double>();
            else if (key == "p_t") cfg.p_t = value.get<double>();
            else if (key == "sigma2") cfg.sigma2 = value.get<double>();
            else if (key == "delta_t") cfg.delta_t = value.get<double>();
            else if (key == "k_slots") cfg.k_slots = value.get<int>();
            else if (key == "window_l") cfg.window_l = value.get<int>();
            else if (key == "ue_pos") cfg.ue_pos = parse_location(value, key);
            else if (key == "speed_lo") cfg.speed_lo = value.get<double>();
            else if (key == "speed_hi") cfg.speed_hi = value.get<double>();
            else if (key == "heading_lo") cfg.heading_lo = value.get<double>();
            else if (key == "heading_hi") cfg.heading_hi = value.get<double>();
            else if (key == "sigma_v") cfg.sigma_v = value.get<double>();
            else if (key == "uav_start") cfg.uav_start = parse_location(value, key);
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "train") continue;  // TrainConfig block, parsed elsewhere
            else unknown += (unknown.empty() ? "" : ", ") + key;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
    if (!unknown.empty()) {
        throw ConfigError("unknown config keys: " + unknown);
    }
    validate(cfg);
    return cfg;
}

ScenarioConfig load_scenario_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_scenario_config(ss.str());
}

namespace {

void hash_u64(std::uint64_t& h, std::uint64_t v) {
    // FNV-1a, one byte at a time
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 0x100000001B3ULL;
    }
}

void hash_f64(std::uint64_t& h, double v) {
    hash_u64(h, std::bit_cast<std::uint64_t>(v));
}

}  // namespace

std::uint64_t config_hash(const ScenarioConfig& cfg) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    hash_u64(h, static_cast<std::uint64_t>(cfg.m_tx));
    hash_u64(h, static_cast<std::uint64_t>(cfg.n_rx));
    hash_f64(h, cfg.f_c);
    hash_f64(h, cfg.c_prop);
    hash_f64(h, cfg.p_t);
    hash_f64(h, cfg.sigma2);
    hash_f64(h, cfg.delta_t);
    hash_u64(h, static_cast<std::uint64_t>(cfg.k_slots));
    hash_u64(h, static_cast<std::uint64_t>(cfg.window_l));
    hash_f64(h, cfg.ue_pos.x);
    hash_f64(h, cfg.ue_pos.y);
    hash_f64(h, cfg.speed_lo);
    hash_f64(h, cfg.speed_hi);
    hash_f64(h, cfg.heading_lo);
    hash_f64(h, cfg.heading_hi);
    hash_f64(h, cfg.sigma_v);
    hash_f64(h, cfg.uav_start.x);
    hash_f64(h, cfg.uav_start.y);
    hash_u64(h, cfg.seed);
    return h;
}

Velocity draw_velocity(RandomSource& rng, const ScenarioConfig& cfg) {
    Velocity v;
    v.amplitude = rng.uniform(cfg.speed_lo, cfg.speed_hi);
    v.heading = rng.uniform(cfg.heading_lo, cfg.heading_hi);
    return v;
}

Location step(const Location& u_prev, RandomSource& rng, const ScenarioConfig& cfg) {
    const Velocity v = draw_velocity(rng, cfg);
    const auto [dx, dy] = rng.gaussian2(cfg.sigma_v);
    return {u_prev.x + v.amplitude * std::cos(v.heading) + dx,
            u_prev.y + v.amplitude * std::sin(v.heading) + dy};
}

namespace {

// Generation only involves the motion fields; window_l and the link budget are
// checked where they are used (dataset building, episodes, config load).
void validate_motion(const ScenarioConfig& cfg) {
    if (cfg.k_slots < 1 || cfg.speed_lo < 0.0 || cfg.speed_lo > cfg.speed_hi ||
        cfg.heading_lo < -kPi || cfg.heading_lo > cfg.heading_hi || cfg.heading_hi > kPi ||
        cfg.sigma_v < 0.0 || !std::isfinite(cfg.uav_start.x) ||
        !std::isfinite(cfg.uav_start.y)) {
        throw ConfigError("invalid motion config");
    }
}

}  // namespace

Trajectory generate_trajectory(const ScenarioConfig& cfg) {
    validate_motion(cfg);
    RandomSource rng(cfg.seed);
    Trajectory traj;
    traj.config_hash = config_hash(cfg);
    traj.locations.reserve(cfg.k_slots);
    traj.locations.push_back(cfg.uav_start);
    for (int k = 1; k < cfg.k_slots; ++k) {
        traj.locations.push_back(step(traj.locations.back(), rng, cfg));
        const Location& u = traj.locations.back();
        const double range = std::hypot(u.x - cfg.ue_pos.x, u.y - cfg.ue_pos.y);
        if (range < kMinUeRange) {
            throw NumericalError("trajectory passes within 0.5 m of the UE at slot " +
                                 std::to_string(k));
        }
    }
    return traj;
}

double relative_angle(const Location& u, const Location& ue) {
    const double dx = u.x - ue.x;
    const double dy = u.y - ue.y;
    const double r = std::hypot(dx, dy);
    if (r == 0.0) {
        throw NumericalError("relative_angle: UAV coincides with the UE");
    }
    double c = dx / r;
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return std::acos(c);
}

TrajectoryWindow window(const Trajectory& traj, int k, int l) {
    if (k < l) {
        throw std::out_of_range("window: insufficient history (k < l)");
    }
    if (k >= static_cast<int>(traj.locations.size())) {
        throw std::out_of_range("window: k beyond trajectory end");
    }
    TrajectoryWindow w;
    w.target_index = k;
    w.columns.assign(traj.locations.begin() + (k - l), traj.locations.begin() + k);
    return w;
}

}  // namespace uavbeam
