#include "uavbeam/episode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uavbeam/channel.hpp"
#include "uavbeam/errors.hpp"

namespace uavbeam {

namespace {

SchemeSlot genie_slot(const Location& u, double theta, double snr0) {
    SchemeSlot slot;
    slot.pred = u;
    slot.theta_hat = theta;
    slot.beam_gain = 1.0;
    slot.snr = snr0;
    slot.rate = rate(snr0);
    return slot;
}

SchemeSlot predicted_slot(const Location& pred, const Location& ue, double theta, double snr0,
                          int n_rx) {
    SchemeSlot slot;
    slot.pred = pred;
    slot.theta_hat = relative_angle(pred, ue);
    slot.beam_gain = beam_gain(slot.theta_hat, theta, n_rx);
    slot.snr = snr0 * slot.beam_gain;
    slot.rate = rate(slot.snr);
    return slot;
}

}  // namespace

std::vector<EpisodeRecord> run_episode(const LrnetModel& model, const ScenarioConfig& cfg,
                                       std::uint64_t episode_seed,
                                       const EpisodeOptions& options) {
    validate(cfg);
    if (model.window_l != cfg.window_l) {
        throw std::invalid_argument("run_episode: model window length does not match config");
    }
    ScenarioConfig ecfg = cfg;
    ecfg.seed = episode_seed;
    const Trajectory traj = generate_trajectory(ecfg);
    const std::uint64_t chash = traj.config_hash;
    const int len = cfg.window_l;

    std::vector<EpisodeRecord> records;
    records.reserve(cfg.k_slots);

    KalmanState filter;
    bool filter_live = false;

    for (int k = 0; k < cfg.k_slots; ++k) {
        const Location& u = traj.locations[k];
        const ChannelState state = channel_state(u, cfg.ue_pos, cfg);
        const double snr0 = cfg.p_t * state.path_gain * state.path_gain / cfg.sigma2;

        EpisodeRecord rec;
        rec.k = k;
        rec.u = u;
        rec.theta = state.theta;
        rec.range = state.range;
        rec.episode_seed = episode_seed;
        rec.config_hash = chash;
        rec.genie = genie_slot(u, state.theta, snr0);

        if (k < len) {
            rec.warm_up = true;
            rec.lrnet = rec.genie;
            rec.kalman = rec.genie;
        } else {
            const TrajectoryWindow w = window(traj, k, len);
            rec.lrnet = predicted_slot(predict_location(model, w), cfg.ue_pos, state.theta,
                                       snr0, cfg.n_rx);

            Location kalman_pred;
            if (options.kalman_mode == KalmanMode::two_point_reinit) {
                kalman_pred = baseline_predict(traj.locations[k - 2], traj.locations[k - 1],
                                               cfg.delta_t);
            } else {
                if (!filter_live) {
                    filter = init_two_point(traj.locations[k - 2], traj.locations[k - 1],
                                            cfg.delta_t, options.kalman_q, options.kalman_r);
                    filter_live = true;
                } else {
                    filter = kf_update(filter, traj.locations[k - 1], options.kalman_r);
                }
                filter = kf_predict(filter, cfg.delta_t, options.kalman_q);
                kalman_pred = {filter.state[0], filter.state[1]};
            }
            rec.kalman = predicted_slot(kalman_pred, cfg.ue_pos, state.theta, snr0, cfg.n_rx);
        }
        records.push_back(rec);
    }
    return records;
}

std::vector<EpisodeRecord> run_failover_episode(const LrnetModel& model,
                                                const ScenarioConfig& cfg,
                                                std::uint64_t episode_seed,
                                                const std::set<int>& blackout) {
    validate(cfg);
    if (model.window_l != cfg.window_l) {
        throw std::invalid_argument("run_failover_episode: model window length mismatch");
    }
    const int len = cfg.window_l;
    for (int k : blackout) {
        if (k < len || k >= cfg.k_slots) {
            throw ConfigError("blackout slot " + std::to_string(k) +
                              " outside the predicted range [window_l, k_slots)");
        }
    }
    if (static_cast<int>(blackout.size()) >= cfg.k_slots - len) {
        throw ConfigError("blackout covers every predicted slot of the episode");
    }

    ScenarioConfig ecfg = cfg;
    ecfg.seed = episode_seed;
    const Trajectory traj = generate_trajectory(ecfg);
    const std::uint64_t chash = traj.config_hash;

    std::vector<EpisodeRecord> records;
    records.reserve(cfg.k_slots);

    // belief[j]: what the UE holds for slot j. The report carrying u_j arrives
    // at slot j+1, so it is lost exactly when j+1 is a blackout slot; the gap
    // is filled with the LRNet scheme's own prediction for slot j.
    std::vector<Location> belief = traj.locations;
    std::vector<bool> received(traj.locations.size(), true);

    for (int k = 0; k < cfg.k_slots; ++k) {
        const Location& u = traj.locations[k];
        const ChannelState state = channel_state(u, cfg.ue_pos, cfg);
        const double snr0 = cfg.p_t * state.path_gain * state.path_gain / cfg.sigma2;

        EpisodeRecord rec;
        rec.k = k;
        rec.u = u;
        rec.theta = state.theta;
        rec.range = state.range;
        rec.episode_seed = episode_seed;
        rec.config_hash = chash;
        rec.genie = genie_slot(u, state.theta, snr0);

        if (k < len) {
            rec.warm_up = true;
            rec.lrnet = rec.genie;
            rec.kalman = rec.genie;
        } else {
            if (blackout.count(k) > 0) {
                received[k - 1] = false;  // u_{k-1} never arrives
                belief[k - 1] = records[k - 1].lrnet.pred;
            }
            // LRNet: window over received-or-predicted history
            TrajectoryWindow w;
            w.target_index = k;
            w.columns.assign(belief.begin() + (k - len), belief.begin() + k);
            rec.lrnet = predicted_slot(predict_location(model, w), cfg.ue_pos, state.theta,
                                       snr0, cfg.n_rx);

            // Kalman: extrapolate from the last two reports that arrived
            int j1 = k - 1;
            while (j1 > 0 && !received[j1]) --j1;
            int j0 = j1 - 1;
            while (j0 > 0 && !received[j0]) --j0;
            const Location& a = traj.locations[j0];
            const Location& b = traj.locations[j1];
            const double span = static_cast<double>(j1 - j0);
            const double steps = static_cast<double>(k - j1);
            const Location kalman_pred{b.x + (b.x - a.x) * steps / span,
                                       b.y + (b.y - a.y) * steps / span};
            rec.kalman = predicted_slot(kalman_pred, cfg.ue_pos, state.theta, snr0, cfg.n_rx);
        }
        records.push_back(rec);
    }
    return records;
}

namespace {

double err_m(const EpisodeRecord& rec, const SchemeSlot& slot) {
    return std::hypot(rec.u.x - slot.pred.x, rec.u.y - slot.pred.y);
}

SchemeSummary summarize_scheme(const std::vector<const EpisodeRecord*>& rows,
                               SchemeSlot EpisodeRecord::*member) {
    SchemeSummary s;
    std::vector<double> errs;
    errs.reserve(rows.size());
    double rate_acc = 0.0;
    for (const auto* rec : rows) {
        const SchemeSlot& slot = rec->*member;
        rate_acc += slot.rate;
        errs.push_back(err_m(*rec, slot));
    }
    const double n = static_cast<double>(rows.size());
    s.mean_rate = rate_acc / n;
    double var_acc = 0.0;
    for (const auto* rec : rows) {
        const double d = (rec->*member).rate - s.mean_rate;
        var_acc += d * d;
    }
    s.rate_std = std::sqrt(var_acc / n);
    double err_acc = 0.0;
    for (double e : errs) {
        err_acc += e;
    }
    s.mean_err = err_acc / n;
    std::sort(errs.begin(), errs.end());
    const std::size_t mid = errs.size() / 2;
    s.median_err =
        (errs.size() % 2 == 1) ? errs[mid] : 0.5 * (errs[mid - 1] + errs[mid]);
    s.max_err = errs.back();
    return s;
}

}  // namespace

SummaryMetrics summarize(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) {
        throw std::domain_error("summarize: no records");
    }
    std::vector<const EpisodeRecord*> rows;
    int warm = 0;
    for (const auto& rec : records) {
        if (rec.warm_up) {
            ++warm;
        } else {
            rows.push_back(&rec);
        }
    }
    if (rows.empty()) {  // warm-up-only episode: aggregate everything
        for (const auto& rec : records) {
            rows.push_back(&rec);
        }
    }

    SummaryMetrics m;
    m.episode_seed = records.front().episode_seed;
    m.config_hash = records.front().config_hash;
    m.warm_up_slots = warm;
    m.slots = static_cast<int>(rows.size());
    m.genie = summarize_scheme(rows, &EpisodeRecord::genie);
    m.lrnet = summarize_scheme(rows, &EpisodeRecord::lrnet);
    m.kalman = summarize_scheme(rows, &EpisodeRecord::kalman);
    m.genie.rate_ratio = 1.0;
    m.lrnet.rate_ratio = m.lrnet.mean_rate / m.genie.mean_rate;
    m.kalman.rate_ratio = m.kalman.mean_rate / m.genie.mean_rate;
    return m;
}

}  // namespace uavbeam
