#ifndef UAVBEAM_CSVIO_HPP
#define UAVBEAM_CSVIO_HPP

#include <string>
#include <vector>

#include "uavbeam/episode.hpp"

namespace uavbeam {

/// Decimal with 9 significant digits. Throws NumericalError on NaN/Inf; no
/// non-finite value is ever written to a CSV.
std::string fmt9(double v);

// Episode trajectory file:
// k,x_true,y_true,x_pred_lrnet,y_pred_lrnet,err_lrnet_m,x_pred_kalman,y_pred_kalman,err_kalman_m
void write_trajectory_csv(const std::vector<EpisodeRecord>& records, const std::string& path);

// Episode rate file: k,range_m,rate_genie,rate_lrnet,rate_kalman
void write_rate_csv(const std::vector<EpisodeRecord>& records, const std::string& path);

// Per-episode summary rows (one line per episode).
void write_summary_csv(const std::vector<SummaryMetrics>& episodes, const std::string& path);

// Raw trajectory: k,x,y
void write_raw_trajectory_csv(const Trajectory& traj, const std::string& path);

// Training history: epoch,train_loss,val_loss
void write_loss_csv(const std::vector<EpochStats>& history, const std::string& path);

}  // namespace uavbeam

#endif
