#ifndef UAVBEAM_CHANNEL_HPP
#define UAVBEAM_CHANNEL_HPP

#include <complex>

#include "uavbeam/numerics.hpp"
#include "uavbeam/scenario.hpp"

namespace uavbeam {

enum class BeamSide { transmit, receive };

// Unit-norm ULA response; element n is exp(-j pi n cos(angle)) / sqrt(len).
// The half-wavelength spacing is folded into the pi factor.
struct SteeringVector {
    ComplexVec vec;
    double angle = 0.0;
    BeamSide side = BeamSide::transmit;
};

// LOS link state at one slot; the dense rank-1 channel is reconstructed on
// demand, never stored.
struct ChannelState {
    double path_gain = 0.0;  // amplitude, unitless
    double theta = 0.0;      // rad
    double range = 0.0;      // m
};

struct BeamPair {
    SteeringVector tx_beam;
    SteeringVector rx_beam;
};

struct RxSample {
    std::complex<double> value;
    std::complex<double> tx_symbol;
    double noise_power = 0.0;  // W
};

struct ComplexMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::complex<double>> a;  // row-major

    ComplexMatrix() = default;
    ComplexMatrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}
    std::complex<double>& operator()(int i, int j) {
        return a[static_cast<std::size_t>(i) * cols + j];
    }
    std::complex<double> operator()(int i, int j) const {
        return a[static_cast<std::size_t>(i) * cols + j];
    }
};

/// Throws std::domain_error if len < 1.
SteeringVector steering(double theta, int len, BeamSide side = BeamSide::transmit);

/// Free-space amplitude gain c / (4 pi f_c d). Throws NumericalError on
/// coincident points.
double path_gain(const Location& u, const Location& ue, const ScenarioConfig& cfg);

/// Path gain + relative angle + range for one slot.
ChannelState channel_state(const Location& u, const Location& ue, const ScenarioConfig& cfg);

/// Dense rank-1 LOS channel h * b(theta) a(theta)^H, size n_rx x m_tx.
ComplexMatrix channel_matrix(const ChannelState& state, int m_tx, int n_rx);

/// One received sample w^H H f s + eta, eta circularly-symmetric complex
/// Gaussian with total variance sigma2 (sigma2/2 per component).
RxSample receive_sample(const ChannelState& state, const BeamPair& beams,
                        std::complex<double> s, RandomSource& rng, double sigma2);

/// Receive SNR with a matched transmit beam: p_t |h w^H b(theta)|^2 / sigma2.
double snr(const ChannelState& state, const SteeringVector& rx_beam, double p_t, double sigma2);

/// Achievable rate log2(1 + snr). Throws std::domain_error on negative input.
double rate(double snr_value);

/// Beam misalignment gain |b(theta_hat)^H b(theta)|^2 for an n-element ULA
/// (Dirichlet kernel in cos theta), in [0, 1].
double beam_gain(double theta_hat, double theta, int n);

}  // namespace uavbeam

#endif
