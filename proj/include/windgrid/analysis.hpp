#pragma once

#include <optional>
#include <vector>

#include "windgrid/simulator.hpp"

namespace windgrid {

struct LinearizedPlant {
  Mat a;  // 9x9
  Mat b;  // 9x2
  Mat c;  // 6x9
  Vec r;  // 9
  WindVec x_star = WindVec::Zero();
  Vec y_star;
  double v1_star = 0.0;
};

// Central-difference Jacobian of the wind vector field at (x_star, v1_star).
// The model must carry the equilibrium setpoints.
LinearizedPlant linearize_wind(const WindPlantModel& m, const WindVec& x_star, double v1_star);
LinearizedPlant linearize_wind(const SystemModel& m, const EquilibriumPoint& eq);

// Embeds a measurement deviation into the state with zeros at theta, xi_d, xi_q.
WindVec lift_measurement(const Vec& y_dev);

// f(y_dev) = F(x* + lift(y_dev)) - F(x*) - A lift(y_dev).
Vec residue_f(const LinearizedPlant& lp, const WindPlantModel& m, const Vec& y_dev);

enum class Exec { Serial, Parallel };

// Central-difference Jacobian of the full right-hand side at x.
Mat system_jacobian(const SystemDynamics& dyn, const Vec& x, Exec exec = Exec::Parallel);

// Removes the rotation invariance: angles are taken relative to machine 0 and
// its angle coordinate is dropped.
Mat relative_angle_reduction(const Mat& j, const StateLayout& layout);

struct Spectrum {
  double gamma = 0.0;
  std::vector<Complex> eigenvalues;
  double abscissa() const;
};

std::vector<Complex> eigenvalues(const Mat& a);

Spectrum system_spectrum(const SystemModel& m, const EquilibriumPoint& eq,
                         const RetrofitController* rc = nullptr, Exec exec = Exec::Parallel);

struct TrackedPair {
  std::vector<double> gammas;
  std::vector<Complex> values;  // upper-half-plane member of the pair
  std::optional<double> critical_gamma;
  double max_step = 0.0;  // largest modulus jump between consecutive matches
};

// Nearest-neighbour tracking from the eigenvalue closest to seed.
TrackedPair track_pair(const std::vector<Spectrum>& spectra, Complex seed);

struct SweepResult {
  std::vector<Spectrum> spectra;
  TrackedPair tracked;
};

SweepResult eigen_sweep(const SystemModel& base, const Dispatch& dispatch,
                        const std::vector<double>& gammas, Complex seed,
                        Exec exec = Exec::Parallel);

struct RiccatiSolution {
  Mat p;
  Mat k;
  double residual = 0.0;
};

// Continuous algebraic Riccati equation A'P + PA - PBR^-1B'P + Q = 0.
// Hamiltonian eigenvector solve followed by Newton-Kleinman refinement.
RiccatiSolution solve_riccati(const Mat& a, const Mat& b, const Mat& q, const Mat& r);

double riccati_residual(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const Mat& p);

// Solves A'X + XA + Q = 0 by complex Schur substitution.
Mat solve_lyapunov(const Mat& a, const Mat& q);

// Observer gain from the dual Riccati equation; A - L C is Hurwitz.
Mat design_observer(const Mat& a, const Mat& c, const Mat& w, const Mat& v);

}  // namespace windgrid
