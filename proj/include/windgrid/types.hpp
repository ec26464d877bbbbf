#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace windgrid {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Synchronous speed in rad/s for a 60 Hz system.
inline constexpr double kSyncSpeed = 120.0 * std::numbers::pi;

// Spectral abscissa: largest real part over the eigenvalues of a square matrix.
double spectral_abscissa(const Mat& a);

}  // namespace windgrid
