#ifndef UAVBEAM_KALMAN_HPP
#define UAVBEAM_KALMAN_HPP

#include "uavbeam/numerics.hpp"
#include "uavbeam/scenario.hpp"

namespace uavbeam {

// Constant-velocity filter state: [x m, y m, vx m/s, vy m/s].
struct KalmanState {
    std::vector<double> state;  // 4
    Mat covariance;             // 4 x 4, symmetric PSD
};

/// Two-point initialization: position from u_b, velocity from the finite
/// difference (u_b - u_a) / delta_t. Covariance per axis is
/// [[r, r/dt], [r/dt, 2r/dt^2]] (standard two-point differencing start).
KalmanState init_two_point(const Location& u_a, const Location& u_b, double delta_t, double q,
                           double r);

/// CV predict: position += velocity * delta_t; P <- F P F^T + Q with the
/// discrete white-acceleration Q scaled by q.
KalmanState kf_predict(const KalmanState& s, double delta_t, double q);

/// Position-measurement update (measurement noise r per axis, Joseph form).
/// Throws NumericalError on a singular innovation covariance.
KalmanState kf_update(const KalmanState& s, const Location& z, double r);

/// The comparison scheme's one-step prediction from the last two reported
/// locations: linear two-point extrapolation 2 u_b - u_a.
Location baseline_predict(const Location& u_a, const Location& u_b, double delta_t);

}  // namespace uavbeam

#endif
