#ifndef UAVBEAM_NUMERICS_HPP
#define UAVBEAM_NUMERICS_HPP

#include <complex>
#include <cstdint>
#include <vector>

namespace uavbeam {

using ComplexVec = std::vector<std::complex<double>>;

/// Hermitian inner product sum_i conj(x_i) * y_i.
std::complex<double> inner_product(const ComplexVec& x, const ComplexVec& y);

/// Euclidean norm sqrt(|inner_product(x, x)|).
double norm(const ComplexVec& x);

// ---------------------------------------------------------------------------
// RandomSource: xoshiro256++ seeded through splitmix64.
//
// Deterministic per seed: the same seed always reproduces the same stream
// within a build of this library. Gaussian draws use Box-Muller and consume
// exactly two uniform draws per pair.
// ---------------------------------------------------------------------------
class RandomSource {
public:
    static constexpr const char* kAlgorithm = "xoshiro256++";

    explicit RandomSource(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    /// Next raw 64-bit output.
    std::uint64_t next_u64();

    /// Uniform on [0, 1), 53-bit resolution.
    double next_u01();

    /// Uniform on [lo, hi); lo == hi returns lo. Throws std::domain_error if lo > hi.
    double uniform(double lo, double hi);

    /// Two independent N(0, sigma^2) draws (Box-Muller, 2 uniforms consumed).
    /// Throws std::domain_error if sigma < 0.
    std::pair<double, double> gaussian2(double sigma);

    /// Uniform integer in [0, n), n >= 1.
    std::size_t uniform_index(std::size_t n);

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

/// Deterministic child-seed derivation: child = hash(parent, stream_index).
/// Used to split independent RNG streams (per-trajectory, per-episode).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream_index);

// ---------------------------------------------------------------------------
// Small dense row-major real matrix. Only the operations the LSTM and the
// Kalman filter need; not a general linear-algebra suite.
// ---------------------------------------------------------------------------
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;  // row-major

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    std::size_t size() const { return a.size(); }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

/// C += A * B
void matmul_acc(const Mat& A, const Mat& B, Mat& C);
/// C += A^T * B
void matmul_tn_acc(const Mat& A, const Mat& B, Mat& C);
/// C += A * B^T
void matmul_nt_acc(const Mat& A, const Mat& B, Mat& C);

}  // namespace uavbeam

#endif
