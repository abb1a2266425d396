#ifndef UAVBEAM_ERRORS_HPP
#define UAVBEAM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace uavbeam {

// Bad config file, schema violation, malformed input document. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure at runtime: degenerate geometry, training divergence,
// singular innovation covariance. CLI exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace uavbeam

#endif
