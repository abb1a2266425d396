#include "uavbeam/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace uavbeam {

std::complex<double> inner_product(const ComplexVec& x, const ComplexVec& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("inner_product: length mismatch");
    }
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += std::conj(x[i]) * y[i];
    }
    return acc;
}

double norm(const ComplexVec& x) {
    double acc = 0.0;
    for (const auto& v : x) {
        acc += std::norm(v);
    }
    return std::sqrt(acc);
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed) {
    // splitmix64 expansion of the seed into the xoshiro256++ state
    std::uint64_t sm = seed;
    for (auto& word : s_) {
        sm += kGolden;
        word = splitmix64_mix(sm);
    }
}

std::uint64_t RandomSource::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RandomSource::next_u01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform(double lo, double hi) {
    if (lo > hi) {
        throw std::domain_error("uniform: lo > hi");
    }
    if (lo == hi) {
        return lo;
    }
    double v = lo + (hi - lo) * next_u01();
    if (v >= hi) {  // guard against rounding up onto the open bound
        v = std::nextafter(hi, lo);
    }
    return v;
}

std::pair<double, double> RandomSource::gaussian2(double sigma) {
    if (sigma < 0.0) {
        throw std::domain_error("gaussian2: sigma < 0");
    }
    // Box-Muller; u1 shifted into (0, 1] so the log is finite.
    const double u1 = 1.0 - next_u01();
    const double u2 = next_u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    return {sigma * r * std::cos(phi), sigma * r * std::sin(phi)};
}

std::size_t RandomSource::uniform_index(std::size_t n) {
    if (n == 0) {
        throw std::domain_error("uniform_index: n == 0");
    }
    auto idx = static_cast<std::size_t>(next_u01() * static_cast<double>(n));
    return idx < n ? idx : n - 1;
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream_index) {
    return splitmix64_mix(parent ^ splitmix64_mix(stream_index + kGolden));
}

// Loop orders below keep the innermost index contiguous in both the output
// and one operand so the compiler can vectorize.

void matmul_acc(const Mat& A, const Mat& B, Mat& C) {
    for (int i = 0; i < A.rows; ++i) {
        const double* arow = A.row(i);
        double* crow = C.row(i);
        for (int k = 0; k < A.cols; ++k) {
            const double aik = arow[k];
            const double* brow = B.row(k);
            for (int j = 0; j < B.cols; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
}

void matmul_tn_acc(const Mat& A, const Mat& B, Mat& C) {
    for (int k = 0; k < A.rows; ++k) {
        const double* arow = A.row(k);
        const double* brow = B.row(k);
        for (int i = 0; i < A.cols; ++i) {
            const double aki = arow[i];
            double* crow = C.row(i);
            for (int j = 0; j < B.cols; ++j) {
                crow[j] += aki * brow[j];
            }
        }
    }
}

void matmul_nt_acc(const Mat& A, const Mat& B, Mat& C) {
    for (int i = 0; i < A.rows; ++i) {
        const double* arow = A.row(i);
        double* crow = C.row(i);
        for (int j = 0; j < B.rows; ++j) {
            const double* brow = B.row(j);
            double acc = 0.0;
            for (int k = 0; k < A.cols; ++k) {
                acc += arow[k] * brow[k];
            }
            crow[j] += acc;
        }
    }
}

}  // namespace uavbeam
