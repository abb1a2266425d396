#include "uavbeam/kalman.hpp"

#include <cmath>
#include <stdexcept>

#include "uavbeam/errors.hpp"

namespace uavbeam {

namespace {

constexpr double kDefaultQ = 1.0;     // white-acceleration scale, m^2/s^3
constexpr double kDefaultR = 1e-4;    // measurement variance, m^2 (sigma_v^2)

Mat matmul(const Mat& a, const Mat& b) {
    Mat c(a.rows, b.cols);
    matmul_acc(a, b, c);
    return c;
}

Mat transpose(const Mat& m) {
    Mat t(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) {
            t(j, i) = m(i, j);
        }
    }
    return t;
}

Mat cv_transition(double dt) {
    Mat f(4, 4);
    f(0, 0) = 1.0;
    f(1, 1) = 1.0;
    f(2, 2) = 1.0;
    f(3, 3) = 1.0;
    f(0, 2) = dt;
    f(1, 3) = dt;
    return f;
}

Mat white_accel_q(double dt, double q) {
    const double dt2 = dt * dt;
    const double dt3 = dt2 * dt;
    const double dt4 = dt2 * dt2;
    Mat m(4, 4);
    m(0, 0) = q * dt4 / 4.0;
    m(1, 1) = q * dt4 / 4.0;
    m(0, 2) = q * dt3 / 2.0;
    m(2, 0) = q * dt3 / 2.0;
    m(1, 3) = q * dt3 / 2.0;
    m(3, 1) = q * dt3 / 2.0;
    m(2, 2) = q * dt2;
    m(3, 3) = q * dt2;
    return m;
}

}  // namespace

KalmanState init_two_point(const Location& u_a, const Location& u_b, double delta_t, double q,
                           double r) {
    if (delta_t <= 0.0) {
        throw std::domain_error("init_two_point: delta_t must be > 0");
    }
    (void)q;  // the process noise scale enters at the first predict
    KalmanState s;
    s.state = {u_b.x, u_b.y, (u_b.x - u_a.x) / delta_t, (u_b.y - u_a.y) / delta_t};
    s.covariance = Mat(4, 4);
    const double rv = r / delta_t;
    for (int axis = 0; axis < 2; ++axis) {
        s.covariance(axis, axis) = r;
        s.covariance(axis, axis + 2) = rv;
        s.covariance(axis + 2, axis) = rv;
        s.covariance(axis + 2, axis + 2) = 2.0 * r / (delta_t * delta_t);
    }
    return s;
}

KalmanState kf_predict(const KalmanState& s, double delta_t, double q) {
    const Mat f = cv_transition(delta_t);
    KalmanState out;
    out.state = {s.state[0] + s.state[2] * delta_t, s.state[1] + s.state[3] * delta_t,
                 s.state[2], s.state[3]};
    out.covariance = matmul(matmul(f, s.covariance), transpose(f));
    const Mat qm = white_accel_q(delta_t, q);
    for (std::size_t i = 0; i < out.covariance.a.size(); ++i) {
        out.covariance.a[i] += qm.a[i];
    }
    return out;
}

KalmanState kf_update(const KalmanState& s, const Location& z, double r) {
    const Mat& p = s.covariance;
    // S = H P H^T + r I with H selecting the position block
    const double s00 = p(0, 0) + r;
    const double s01 = p(0, 1);
    const double s10 = p(1, 0);
    const double s11 = p(1, 1) + r;
    const double det = s00 * s11 - s01 * s10;
    if (!(std::fabs(det) > 1e-300)) {
        throw NumericalError("kf_update: singular innovation covariance");
    }
    const double i00 = s11 / det;
    const double i01 = -s01 / det;
    const double i10 = -s10 / det;
    const double i11 = s00 / det;

    // K = P H^T S^{-1}  (4 x 2)
    Mat k(4, 2);
    for (int i = 0; i < 4; ++i) {
        const double ph0 = p(i, 0);
        const double ph1 = p(i, 1);
        k(i, 0) = ph0 * i00 + ph1 * i10;
        k(i, 1) = ph0 * i01 + ph1 * i11;
    }

    const double innov_x = z.x - s.state[0];
    const double innov_y = z.y - s.state[1];
    KalmanState out;
    out.state = s.state;
    for (int i = 0; i < 4; ++i) {
        out.state[i] += k(i, 0) * innov_x + k(i, 1) * innov_y;
    }

    // Joseph form keeps the posterior covariance symmetric PSD
    Mat ikh(4, 4);
    for (int i = 0; i < 4; ++i) {
        ikh(i, i) = 1.0;
    }
    for (int i = 0; i < 4; ++i) {
        ikh(i, 0) -= k(i, 0);
        ikh(i, 1) -= k(i, 1);
    }
    Mat post = matmul(matmul(ikh, p), transpose(ikh));
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            post(i, j) += r * (k(i, 0) * k(j, 0) + k(i, 1) * k(j, 1));
        }
    }
    // symmetrize away the last rounding residue
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            const double m = 0.5 * (post(i, j) + post(j, i));
            post(i, j) = m;
            post(j, i) = m;
        }
    }
    out.covariance = std::move(post);
    return out;
}

Location baseline_predict(const Location& u_a, const Location& u_b, double delta_t) {
    const KalmanState s = init_two_point(u_a, u_b, delta_t, kDefaultQ, kDefaultR);
    const KalmanState pred = kf_predict(s, delta_t, kDefaultQ);
    return {pred.state[0], pred.state[1]};
}

}  // namespace uavbeam
