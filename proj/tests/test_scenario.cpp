#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uavbeam/errors.hpp"
#include "uavbeam/scenario.hpp"

using namespace uavbeam;

namespace {

constexpr double kPi = std::numbers::pi;

ScenarioConfig fixed_motion(double amplitude, double heading) {
    ScenarioConfig cfg;
    cfg.speed_lo = cfg.speed_hi = amplitude;
    cfg.heading_lo = cfg.heading_hi = heading;
    cfg.sigma_v = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("step with degenerate draws moves deterministically") {
    RandomSource rng(1);
    ScenarioConfig cfg = fixed_motion(0.4, 0.0);
    const Location next = step({0.0, 0.0}, rng, cfg);
    CHECK(next.x == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(next.y == 0.0);

    ScenarioConfig cfg2 = fixed_motion(0.5, kPi / 6.0);
    const Location next2 = step({10.0, 10.0}, rng, cfg2);
    CHECK(next2.x == doctest::Approx(10.0 + 0.5 * std::cos(kPi / 6.0)).epsilon(1e-15));
    CHECK(next2.x == doctest::Approx(10.4330127).epsilon(1e-8));
    CHECK(next2.y == doctest::Approx(10.25).epsilon(1e-15));

    ScenarioConfig cfg3 = fixed_motion(0.0, 0.0);
    const Location frozen = step({3.0, -2.0}, rng, cfg3);
    CHECK(frozen.x == 3.0);
    CHECK(frozen.y == -2.0);
}

TEST_CASE("velocity draws stay inside the configured bounds") {
    ScenarioConfig cfg;
    RandomSource rng(8);
    for (int i = 0; i < 2000; ++i) {
        const Velocity v = draw_velocity(rng, cfg);
        CHECK(v.amplitude >= cfg.speed_lo);
        CHECK(v.amplitude < cfg.speed_hi);
        CHECK(v.heading >= cfg.heading_lo);
        CHECK(v.heading < cfg.heading_hi);
    }
}

TEST_CASE("step draw order is amplitude, heading, then the gaussian pair") {
    ScenarioConfig cfg;
    cfg.seed = 99;
    RandomSource rng(cfg.seed), mirror(cfg.seed);
    const Location got = step({1.0, 2.0}, rng, cfg);
    const double amplitude = mirror.uniform(cfg.speed_lo, cfg.speed_hi);
    const double heading = mirror.uniform(cfg.heading_lo, cfg.heading_hi);
    const auto [dx, dy] = mirror.gaussian2(cfg.sigma_v);
    CHECK(got.x == 1.0 + amplitude * std::cos(heading) + dx);
    CHECK(got.y == 2.0 + amplitude * std::sin(heading) + dy);
}

TEST_CASE("generate_trajectory single slot returns the start") {
    ScenarioConfig cfg;
    cfg.k_slots = 1;
    const Trajectory traj = generate_trajectory(cfg);
    REQUIRE(traj.locations.size() == 1);
    CHECK(traj.locations[0].x == cfg.uav_start.x);
    CHECK(traj.locations[0].y == cfg.uav_start.y);
}

TEST_CASE("generate_trajectory deterministic straight line") {
    ScenarioConfig cfg = fixed_motion(0.4, 0.0);
    cfg.uav_start = {0.0, 0.0};
    cfg.ue_pos = {0.0, -10.0};  // keep the UE off the path
    cfg.k_slots = 3;
    const Trajectory traj = generate_trajectory(cfg);
    REQUIRE(traj.locations.size() == 3);
    CHECK(traj.locations[0].x == 0.0);
    CHECK(traj.locations[1].x == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(traj.locations[2].x == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(traj.locations[2].y == 0.0);
}

TEST_CASE("generate_trajectory replays exactly and varies with seed") {
    ScenarioConfig cfg;
    cfg.seed = 31;
    const Trajectory a = generate_trajectory(cfg);
    const Trajectory b = generate_trajectory(cfg);
    REQUIRE(a.locations.size() == b.locations.size());
    for (std::size_t i = 0; i < a.locations.size(); ++i) {
        CHECK(a.locations[i].x == b.locations[i].x);
        CHECK(a.locations[i].y == b.locations[i].y);
    }
    CHECK(a.config_hash == b.config_hash);

    cfg.seed = 32;
    const Trajectory c = generate_trajectory(cfg);
    CHECK(c.config_hash != a.config_hash);
    CHECK(c.locations[5].x != a.locations[5].x);
}

TEST_CASE("total path length stays within the speed bounds") {
    for (std::uint64_t seed : {1ULL, 7ULL, 1234ULL}) {
        ScenarioConfig cfg;
        cfg.seed = seed;
        const Trajectory traj = generate_trajectory(cfg);
        double total = 0.0;
        const double slack = 6.0 * cfg.sigma_v * std::sqrt(2.0);
        for (std::size_t k = 1; k < traj.locations.size(); ++k) {
            const double d = std::hypot(traj.locations[k].x - traj.locations[k - 1].x,
                                        traj.locations[k].y - traj.locations[k - 1].y);
            CHECK(d >= cfg.speed_lo - slack);
            CHECK(d <= cfg.speed_hi + slack);
            total += d;
        }
        const double n = static_cast<double>(cfg.k_slots - 1);
        CHECK(total >= 0.4 * n - 6.0 * cfg.sigma_v * std::sqrt(n));
        CHECK(total <= 0.7 * n + 6.0 * cfg.sigma_v * std::sqrt(n));
    }
}

TEST_CASE("noise-free steps respect speed and heading bounds exactly") {
    ScenarioConfig cfg;
    cfg.sigma_v = 0.0;
    cfg.seed = 5;
    const Trajectory traj = generate_trajectory(cfg);
    for (std::size_t k = 1; k < traj.locations.size(); ++k) {
        const double dx = traj.locations[k].x - traj.locations[k - 1].x;
        const double dy = traj.locations[k].y - traj.locations[k - 1].y;
        const double d = std::hypot(dx, dy);
        CHECK(d >= cfg.speed_lo - 1e-12);
        CHECK(d <= cfg.speed_hi + 1e-12);
        const double heading = std::atan2(dy, dx);
        CHECK(heading >= cfg.heading_lo - 1e-12);
        CHECK(heading <= cfg.heading_hi + 1e-12);
    }
}

TEST_CASE("generation aborts near the UE") {
    ScenarioConfig cfg = fixed_motion(0.5, kPi);  // straight toward -x
    cfg.uav_start = {2.0, 0.0};
    cfg.ue_pos = {0.0, 0.0};
    cfg.k_slots = 30;
    CHECK_THROWS_AS(generate_trajectory(cfg), NumericalError);
}

TEST_CASE("relative_angle basics") {
    CHECK(relative_angle({1.0, 0.0}, {0.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(relative_angle({0.0, 5.0}, {0.0, 0.0}) == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(relative_angle({-3.0, 4.0}, {0.0, 0.0}) ==
          doctest::Approx(std::acos(-0.6)).epsilon(1e-15));
    CHECK(relative_angle({-3.0, 4.0}, {0.0, 0.0}) == doctest::Approx(2.214297).epsilon(1e-6));
    CHECK_THROWS_AS(relative_angle({1.0, 1.0}, {1.0, 1.0}), NumericalError);
}

TEST_CASE("relative_angle range and projection identity") {
    RandomSource rng(17);
    for (int i = 0; i < 1000; ++i) {
        const Location u{rng.uniform(-50.0, 50.0), rng.uniform(0.1, 50.0)};
        const Location ue{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 0.0)};
        const double theta = relative_angle(u, ue);
        CHECK(theta >= 0.0);
        CHECK(theta <= kPi);
        const double dist = std::hypot(u.x - ue.x, u.y - ue.y);
        CHECK(std::cos(theta) * dist == doctest::Approx(u.x - ue.x).epsilon(1e-12));
    }
}

TEST_CASE("translation equivariance of angles") {
    ScenarioConfig cfg;
    cfg.seed = 21;
    const Trajectory a = generate_trajectory(cfg);
    ScenarioConfig shifted = cfg;
    shifted.uav_start = {cfg.uav_start.x + 120.0, cfg.uav_start.y - 40.0};
    shifted.ue_pos = {cfg.ue_pos.x + 120.0, cfg.ue_pos.y - 40.0};
    const Trajectory b = generate_trajectory(shifted);
    for (int k = 0; k < cfg.k_slots; ++k) {
        const double ta = relative_angle(a.locations[k], cfg.ue_pos);
        const double tb = relative_angle(b.locations[k], shifted.ue_pos);
        CHECK(ta == doctest::Approx(tb).epsilon(1e-9));
    }
}

TEST_CASE("window extraction") {
    ScenarioConfig cfg = fixed_motion(0.4, 0.0);
    cfg.uav_start = {0.0, 0.0};
    cfg.ue_pos = {0.0, -10.0};
    cfg.k_slots = 40;
    const Trajectory traj = generate_trajectory(cfg);

    const TrajectoryWindow w = window(traj, 2, 2);
    REQUIRE(w.columns.size() == 2);
    CHECK(w.columns[0].x == 0.0);
    CHECK(w.columns[1].x == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(w.target_index == 2);

    const TrajectoryWindow boundary = window(traj, 5, 5);
    CHECK(boundary.columns[0].x == traj.locations[0].x);

    const TrajectoryWindow mid = window(traj, 25, 20);
    for (int i = 0; i < 20; ++i) {
        CHECK(mid.columns[i].x == traj.locations[5 + i].x);
        CHECK(mid.columns[i].y == traj.locations[5 + i].y);
    }

    CHECK_THROWS_AS(window(traj, 3, 5), std::out_of_range);
    CHECK_THROWS_AS(window(traj, 40, 5), std::out_of_range);
}

TEST_CASE("config json accepts exact keys and rejects unknown ones") {
    const auto cfg = load_scenario_config(R"({
        "m_tx": 8, "n_rx": 4, "f_c": 28e9, "p_t": 0.2, "sigma2": 1e-11,
        "delta_t": 0.01, "k_slots": 100, "window_l": 10,
        "ue_pos": [1.0, 2.0], "speed_lo": 0.1, "speed_hi": 0.2,
        "heading_lo": -0.5, "heading_hi": 0.5, "sigma_v": 0.02,
        "uav_start": [30.0, 40.0], "seed": 9,
        "train": {"epochs": 3}
    })");
    CHECK(cfg.m_tx == 8);
    CHECK(cfg.n_rx == 4);
    CHECK(cfg.f_c == 28e9);
    CHECK(cfg.ue_pos.y == 2.0);
    CHECK(cfg.uav_start.x == 30.0);
    CHECK(cfg.seed == 9);
    CHECK(cfg.c_prop == 3.0e8);  // default kept

    CHECK_THROWS_AS(load_scenario_config(R"({"m_tx": 8, "bogus": 1})"), ConfigError);
    CHECK_THROWS_WITH_AS(load_scenario_config(R"({"bogus": 1, "alsobad": 2})"),
                         doctest::Contains("bogus"), ConfigError);
    CHECK_THROWS_AS(load_scenario_config("{ not json"), ConfigError);
    CHECK_THROWS_AS(load_scenario_config(R"({"ue_pos": [1.0]})"), ConfigError);
}

TEST_CASE("config invariants are enforced") {
    CHECK_THROWS_AS(load_scenario_config(R"({"m_tx": 0})"), ConfigError);
    CHECK_THROWS_AS(load_scenario_config(R"({"p_t": -1.0})"), ConfigError);
    CHECK_THROWS_AS(load_scenario_config(R"({"speed_lo": 0.8, "speed_hi": 0.5})"), ConfigError);
    CHECK_THROWS_AS(load_scenario_config(R"({"heading_hi": 4.0})"), ConfigError);
    CHECK_THROWS_AS(load_scenario_config(R"({"window_l": 1})"), ConfigError);
    CHECK_THROWS_AS(load_scenario_config(R"({"k_slots": 10, "window_l": 20})"), ConfigError);
}

TEST_CASE("config hash separates configs and seeds") {
    ScenarioConfig a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
    ScenarioConfig c;
    c.p_t = 0.2;
    CHECK(config_hash(a) != config_hash(c));
}
