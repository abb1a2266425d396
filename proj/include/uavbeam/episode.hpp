#ifndef UAVBEAM_EPISODE_HPP
#define UAVBEAM_EPISODE_HPP

#include <cstdint>
#include <set>
#include <vector>

#include "uavbeam/kalman.hpp"
#include "uavbeam/lrnet.hpp"
#include "uavbeam/scenario.hpp"

namespace uavbeam {

enum class KalmanMode {
    two_point_reinit,  // re-initialize from the latest two reports each slot
    continuous,        // one long-running filter across the episode
};

struct EpisodeOptions {
    KalmanMode kalman_mode = KalmanMode::two_point_reinit;
    double kalman_q = 1.0;   // white-acceleration scale for the continuous mode
    double kalman_r = 1e-4;  // measurement variance (sigma_v^2)
};

struct SchemeSlot {
    Location pred;
    double theta_hat = 0.0;
    double beam_gain = 0.0;  // in [0, 1]
    double snr = 0.0;        // linear
    double rate = 0.0;       // bits/s/Hz
};

struct EpisodeRecord {
    int k = 0;
    Location u;
    double theta = 0.0;
    double range = 0.0;
    bool warm_up = false;  // k < window_l: every scheme is genie-aligned
    SchemeSlot genie, lrnet, kalman;
    std::uint64_t episode_seed = 0;
    std::uint64_t config_hash = 0;
};

struct SchemeSummary {
    double mean_rate = 0.0;
    double rate_std = 0.0;  // population convention (1/n)
    double mean_err = 0.0;
    double median_err = 0.0;
    double max_err = 0.0;
    double rate_ratio = 0.0;  // mean rate / genie mean rate
};

struct SummaryMetrics {
    SchemeSummary genie, lrnet, kalman;
    std::uint64_t episode_seed = 0;
    std::uint64_t config_hash = 0;
    int slots = 0;           // rows aggregated (post-warm-up)
    int warm_up_slots = 0;
};

/// Simulate one episode on a fresh trajectory (cfg with seed = episode_seed).
/// Warm-up slots (k < window_l) are genie-aligned for every scheme; from k >=
/// window_l each scheme beamforms from its own prediction based on the true
/// locations up to k-1. Rates are the noiseless log2(1 + SNR).
std::vector<EpisodeRecord> run_episode(const LrnetModel& model, const ScenarioConfig& cfg,
                                       std::uint64_t episode_seed,
                                       const EpisodeOptions& options = {});

/// Same, with the location reports of the given slots lost: at a blackout
/// slot k the UE never receives u_{k-1}. The LRNet scheme fills the gap with
/// its own rolled-forward predictions; the Kalman scheme extrapolates from
/// the last two reports it received; the genie is unaffected.
std::vector<EpisodeRecord> run_failover_episode(const LrnetModel& model,
                                                const ScenarioConfig& cfg,
                                                std::uint64_t episode_seed,
                                                const std::set<int>& blackout);

/// Per-scheme aggregates over the post-warm-up slots (all slots when the
/// episode is warm-up only). Throws std::domain_error on empty input.
SummaryMetrics summarize(const std::vector<EpisodeRecord>& records);

}  // namespace uavbeam

#endif
