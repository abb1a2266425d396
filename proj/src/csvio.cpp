#include "uavbeam/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "uavbeam/errors.hpp"

namespace uavbeam {

std::string fmt9(double v) {
    if (!std::isfinite(v)) {
        throw NumericalError("refusing to emit a non-finite value");
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot open file for writing: " + path);
    }
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) {
        throw ConfigError("failed writing file: " + path);
    }
}

double err_m(const EpisodeRecord& rec, const SchemeSlot& slot) {
    return std::hypot(rec.u.x - slot.pred.x, rec.u.y - slot.pred.y);
}

}  // namespace

void write_trajectory_csv(const std::vector<EpisodeRecord>& records, const std::string& path) {
    auto out = open_out(path);
    out << "k,x_true,y_true,x_pred_lrnet,y_pred_lrnet,err_lrnet_m,"
           "x_pred_kalman,y_pred_kalman,err_kalman_m\n";
    for (const auto& rec : records) {
        out << rec.k << ',' << fmt9(rec.u.x) << ',' << fmt9(rec.u.y) << ','
            << fmt9(rec.lrnet.pred.x) << ',' << fmt9(rec.lrnet.pred.y) << ','
            << fmt9(err_m(rec, rec.lrnet)) << ',' << fmt9(rec.kalman.pred.x) << ','
            << fmt9(rec.kalman.pred.y) << ',' << fmt9(err_m(rec, rec.kalman)) << '\n';
    }
    finish(out, path);
}

void write_rate_csv(const std::vector<EpisodeRecord>& records, const std::string& path) {
    auto out = open_out(path);
    out << "k,range_m,rate_genie,rate_lrnet,rate_kalman\n";
    for (const auto& rec : records) {
        out << rec.k << ',' << fmt9(rec.range) << ',' << fmt9(rec.genie.rate) << ','
            << fmt9(rec.lrnet.rate) << ',' << fmt9(rec.kalman.rate) << '\n';
    }
    finish(out, path);
}

void write_summary_csv(const std::vector<SummaryMetrics>& episodes, const std::string& path) {
    auto out = open_out(path);
    out << "episode,seed,config_hash,slots,warm_up_slots,"
           "mean_rate_genie,mean_rate_lrnet,mean_rate_kalman,"
           "rate_std_genie,rate_std_lrnet,rate_std_kalman,"
           "ratio_lrnet,ratio_kalman,"
           "mean_err_lrnet,median_err_lrnet,max_err_lrnet,"
           "mean_err_kalman,median_err_kalman,max_err_kalman\n";
    int i = 0;
    for (const auto& ep : episodes) {
        out << i++ << ',' << ep.episode_seed << ',' << ep.config_hash << ',' << ep.slots << ','
            << ep.warm_up_slots << ',' << fmt9(ep.genie.mean_rate) << ','
            << fmt9(ep.lrnet.mean_rate) << ',' << fmt9(ep.kalman.mean_rate) << ','
            << fmt9(ep.genie.rate_std) << ',' << fmt9(ep.lrnet.rate_std) << ','
            << fmt9(ep.kalman.rate_std) << ',' << fmt9(ep.lrnet.rate_ratio) << ','
            << fmt9(ep.kalman.rate_ratio) << ',' << fmt9(ep.lrnet.mean_err) << ','
            << fmt9(ep.lrnet.median_err) << ',' << fmt9(ep.lrnet.max_err) << ','
            << fmt9(ep.kalman.mean_err) << ',' << fmt9(ep.kalman.median_err) << ','
            << fmt9(ep.kalman.max_err) << '\n';
    }
    finish(out, path);
}

void write_raw_trajectory_csv(const Trajectory& traj, const std::string& path) {
    auto out = open_out(path);
    out << "k,x,y\n";
    for (std::size_t k = 0; k < traj.locations.size(); ++k) {
        out << k << ',' << fmt9(traj.locations[k].x) << ',' << fmt9(traj.locations[k].y) << '\n';
    }
    finish(out, path);
}

void write_loss_csv(const std::vector<EpochStats>& history, const std::string& path) {
    auto out = open_out(path);
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < history.size(); ++e) {
        out << e << ',' << fmt9(history[e].train_loss) << ',' << fmt9(history[e].val_loss)
            << '\n';
    }
    finish(out, path);
}

}  // namespace uavbeam
