#include "uavbeam/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uavbeam/errors.hpp"

namespace uavbeam {

namespace {
constexpr double kPi = std::numbers::pi;
}

SteeringVector steering(double theta, int len, BeamSide side) {
    if (len < 1) {
        throw std::domain_error("steering: len must be >= 1");
    }
    SteeringVector sv;
    sv.angle = theta;
    sv.side = side;
    sv.vec.resize(len);
    const double scale = 1.0 / std::sqrt(static_cast<double>(len));
    const double phase_step = -kPi * std::cos(theta);
    for (int n = 0; n < len; ++n) {
        sv.vec[n] = std::polar(scale, phase_step * n);
    }
    return sv;
}

double path_gain(const Location& u, const Location& ue, const ScenarioConfig& cfg) {
    const double range = std::hypot(u.x - ue.x, u.y - ue.y);
    if (range == 0.0) {
        throw NumericalError("path_gain: zero range");
    }
    return cfg.c_prop / (4.0 * kPi * cfg.f_c * range);
}

ChannelState channel_state(const Location& u, const Location& ue, const ScenarioConfig& cfg) {
    ChannelState state;
    state.theta = relative_angle(u, ue);
    state.range = std::hypot(u.x - ue.x, u.y - ue.y);
    state.path_gain = cfg.c_prop / (4.0 * kPi * cfg.f_c * state.range);
    return state;
}

ComplexMatrix channel_matrix(const ChannelState& state, int m_tx, int n_rx) {
    const SteeringVector a = steering(state.theta, m_tx, BeamSide::transmit);
    const SteeringVector b = steering(state.theta, n_rx, BeamSide::receive);
    ComplexMatrix h(n_rx, m_tx);
    for (int n = 0; n < n_rx; ++n) {
        for (int m = 0; m < m_tx; ++m) {
            h(n, m) = state.path_gain * b.vec[n] * std::conj(a.vec[m]);
        }
    }
    return h;
}

RxSample receive_sample(const ChannelState& state, const BeamPair& beams,
                        std::complex<double> s, RandomSource& rng, double sigma2) {
    // w^H H f = h * (w^H b(theta)) * (a(theta)^H f)
    const int n_rx = static_cast<int>(beams.rx_beam.vec.size());
    const int m_tx = static_cast<int>(beams.tx_beam.vec.size());
    const SteeringVector b = steering(state.theta, n_rx, BeamSide::receive);
    const SteeringVector a = steering(state.theta, m_tx, BeamSide::transmit);
    const std::complex<double> wb = inner_product(beams.rx_beam.vec, b.vec);
    const std::complex<double> af = inner_product(a.vec, beams.tx_beam.vec);
    const auto [nr, ni] = rng.gaussian2(std::sqrt(sigma2 / 2.0));
    RxSample sample;
    sample.tx_symbol = s;
    sample.noise_power = sigma2;
    sample.value = state.path_gain * wb * af * s + std::complex<double>(nr, ni);
    return sample;
}

double snr(const ChannelState& state, const SteeringVector& rx_beam, double p_t, double sigma2) {
    const int n_rx = static_cast<int>(rx_beam.vec.size());
    const SteeringVector b = steering(state.theta, n_rx, BeamSide::receive);
    const std::complex<double> wb = inner_product(rx_beam.vec, b.vec);
    return p_t * std::norm(state.path_gain * wb) / sigma2;
}

double rate(double snr_value) {
    if (snr_value < 0.0) {
        throw std::domain_error("rate: negative SNR");
    }
    return std::log2(1.0 + snr_value);
}

double beam_gain(double theta_hat, double theta, int n) {
    if (n < 1) {
        throw std::domain_error("beam_gain: n must be >= 1");
    }
    // |(1/n) sum_i exp(j pi i (cos theta - cos theta_hat))|^2
    const double delta = std::cos(theta) - std::cos(theta_hat);
    double re = 0.0;
    double im = 0.0;
    for (int i = 0; i < n; ++i) {
        re += std::cos(kPi * i * delta);
        im += std::sin(kPi * i * delta);
    }
    return (re * re + im * im) / (static_cast<double>(n) * n);
}

}  // namespace uavbeam
