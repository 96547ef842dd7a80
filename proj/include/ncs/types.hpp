#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ncs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Rng = std::mt19937_64;

// Independent, reproducible stream for (seed, stream id).
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NonDiagonalizable : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct GainUnstable : Error { using Error::Error; };
struct DegenerateSpectrum : Error { using Error::Error; };
struct Unsupported : Error { using Error::Error; };
struct TargetUnreachable : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

struct InfeasibleRates : Error {
  InfeasibleRates(int mode, const std::string& what) : Error(what), mode(mode) {}
  int mode;
};

}  // namespace ncs
