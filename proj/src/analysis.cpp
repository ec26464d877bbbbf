#include "windgrid/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <omp.h>

#include "windgrid/errors.hpp"

namespace windgrid {

namespace wi = wind_index;

double spectral_abscissa(const Mat& a) {
  if (a.size() == 0) return -std::numeric_limits<double>::infinity();
  return Eigen::EigenSolver<Mat>(a, false).eigenvalues().real().maxCoeff();
}

std::vector<Complex> eigenvalues(const Mat& a) {
  const CVec ev = Eigen::EigenSolver<Mat>(a, false).eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double Spectrum::abscissa() const {
  double s = -std::numeric_limits<double>::infinity();
  for (const Complex& z : eigenvalues) s = std::max(s, z.real());
  return s;
}

LinearizedPlant linearize_wind(const WindPlantModel& m, const WindVec& x_star, double v1_star) {
  LinearizedPlant lp;
  lp.a = Mat::Zero(kWindStates, kWindStates);
  for (int j = 0; j < kWindStates; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x_star(j)));
    WindVec xp = x_star, xm = x_star;
    xp(j) += h;
    xm(j) -= h;
    lp.a.col(j) =
        (wind_vector_field(m, xp, v1_star).dx - wind_vector_field(m, xm, v1_star).dx) / (2.0 * h);
  }
  lp.b = wind_input_matrix(m.dfig);
  lp.c = wind_output_selector();
  lp.r = wind_voltage_column(m.dfig);
  lp.x_star = x_star;
  lp.y_star = lp.c * x_star;
  lp.v1_star = v1_star;
  return lp;
}

LinearizedPlant linearize_wind(const SystemModel& m, const EquilibriumPoint& eq) {
  return linearize_wind(apply_setpoints(m, eq.setpoints).wind, eq.x_star, eq.v1_star);
}

WindVec lift_measurement(const Vec& y_dev) {
  if (y_dev.size() != kWindOutputs) throw DimensionMismatch("measurement must have 6 entries");
  WindVec x = WindVec::Zero();
  x(wi::omega_r) = y_dev(0);
  x(wi::omega_g) = y_dev(1);
  x.segment<4>(wi::i_dr) = y_dev.tail<4>();
  return x;
}

Vec residue_f(const LinearizedPlant& lp, const WindPlantModel& m, const Vec& y_dev) {
  const WindVec lifted = lift_measurement(y_dev);
  if (m.turbine.p_a != 0.0 && !(lp.x_star(wi::omega_r) + lifted(wi::omega_r) > 0.0)) {
    throw NonphysicalState("residue_f: lifted rotor speed is not positive");
  }
  const WindVec f_pert = wind_vector_field(m, lp.x_star + lifted, lp.v1_star).dx;
  const WindVec f_star = wind_vector_field(m, lp.x_star, lp.v1_star).dx;
  return f_pert - f_star - lp.a * lifted;
}

Mat system_jacobian(const SystemDynamics& dyn, const Vec& x, Exec exec) {
  const int n = static_cast<int>(x.size());
  Mat j(n, n);
  const BusVoltages& v0 = dyn.equilibrium().v_star;
  std::exception_ptr failure;
  auto column = [&](int c) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(c)));
    Vec xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    j.col(c) = (dyn.evaluate(xp, false, v0).dx - dyn.evaluate(xm, false, v0).dx) / (2.0 * h);
  };
  if (exec == Exec::Serial) {
    for (int c = 0; c < n; ++c) column(c);
    return j;
  }
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n; ++c) {
    try {
      column(c);
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return j;
}

Mat relative_angle_reduction(const Mat& j, const StateLayout& layout) {
  if (layout.n_sync == 0) return j;
  const int ref = layout.sync(0);
  Mat t = j;
  for (int k = 1; k < layout.n_sync; ++k) t.row(layout.sync(k)) -= j.row(ref);
  const int n = static_cast<int>(j.rows());
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (i != ref) keep.push_back(i);
  }
  Mat out(n - 1, n - 1);
  for (int a = 0; a < n - 1; ++a) {
    for (int b = 0; b < n - 1; ++b) out(a, b) = t(keep[a], keep[b]);
  }
  return out;
}

namespace {

SystemModel linearization_model(SystemModel m) {
  m.net_opts.tol = std::min(m.net_opts.tol, 1e-12);
  m.net_opts.polish = true;
  return m;
}

}  // namespace

Spectrum system_spectrum(const SystemModel& m, const EquilibriumPoint& eq,
                         const RetrofitController* rc, Exec exec) {
  const SystemDynamics dyn(linearization_model(m), eq, rc);
  const Mat j = system_jacobian(dyn, dyn.initial_state(), exec);
  Spectrum s;
  s.gamma = m.wind.gamma;
  s.eigenvalues = eigenvalues(relative_angle_reduction(j, dyn.layout()));
  return s;
}

TrackedPair track_pair(const std::vector<Spectrum>& spectra, Complex seed) {
  TrackedPair tp;
  Complex prev = seed;
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Complex pick = prev;
    for (const Complex& z : spectra[i].eigenvalues) {
      if (z.imag() <= 0.0) continue;
      const double d = std::abs(z - prev);
      if (d < best) {
        best = d;
        pick = z;
      }
    }
    if (i > 0) tp.max_step = std::max(tp.max_step, best);
    tp.gammas.push_back(spectra[i].gamma);
    tp.values.push_back(pick);
    prev = pick;
  }
  for (std::size_t i = 1; i < tp.values.size(); ++i) {
    const double r0 = tp.values[i - 1].real(), r1 = tp.values[i].real();
    if (r0 < 0.0 && r1 >= 0.0) {
      const double g0 = tp.gammas[i - 1], g1 = tp.gammas[i];
      tp.critical_gamma = g0 + (g1 - g0) * (-r0) / (r1 - r0);
      break;
    }
  }
  return tp;
}

SweepResult eigen_sweep(const SystemModel& base, const Dispatch& dispatch,
                        const std::vector<double>& gammas, Complex seed, Exec exec) {
  SweepResult out;
  const int n = static_cast<int>(gammas.size());
  out.spectra.resize(n);
  std::exception_ptr failure;
  auto point = [&](int i) {
    SystemModel m = base;
    m.wind.gamma = gammas[i];
    const EquilibriumPoint eq = find_equilibrium(m, dispatch);
    out.spectra[i] = system_spectrum(m, eq, nullptr, Exec::Serial);
  };
  if (exec == Exec::Serial) {
    for (int i = 0; i < n; ++i) point(i);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      try {
        point(i);
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  out.tracked = track_pair(out.spectra, seed);
  return out;
}

Mat solve_lyapunov(const Mat& a, const Mat& q) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || q.rows() != n || q.cols() != n) {
    throw DimensionMismatch("solve_lyapunov: dimensions disagree");
  }
  Eigen::ComplexSchur<CMat> schur(a.cast<Complex>());
  const CMat& u = schur.matrixU();
  const CMat& t = schur.matrixT();
  const CMat qt = u.adjoint() * q.cast<Complex>() * u;
  const CMat th = t.adjoint();
  CMat y = CMat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    CVec rhs = -qt.col(j);
    for (int i = 0; i < j; ++i) rhs -= t(i, j) * y.col(i);
    // (T^H + t_jj I) is lower triangular.
    for (int r = 0; r < n; ++r) {
      Complex acc = rhs(r);
      for (int c = 0; c < r; ++c) acc -= th(r, c) * y(c, j);
      const Complex diag = th(r, r) + t(j, j);
      if (std::abs(diag) < 1e-14) {
        throw NotStabilizable("solve_lyapunov: A has eigenvalues symmetric about the imaginary axis");
      }
      y(r, j) = acc / diag;
    }
  }
  const Mat x = (u * y * u.adjoint()).real();
  return 0.5 * (x + x.transpose());
}

double riccati_residual(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const Mat& p) {
  const Mat res = a.transpose() * p + p * a - p * b * r.llt().solve(b.transpose()) * p + q;
  return res.norm();
}

RiccatiSolution solve_riccati(const Mat& a, const Mat& b, const Mat& q, const Mat& r) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m ||
      r.cols() != m) {
    throw DimensionMismatch("solve_riccati: dimensions disagree");
  }
  Eigen::LLT<Mat> r_llt(r);
  if (r_llt.info() != Eigen::Success) throw NotStabilizable("solve_riccati: R is not positive definite");
  const Mat s = b * r_llt.solve(b.transpose());

  Mat h(2 * n, 2 * n);
  h << a, -s, -q, -a.transpose();
  Eigen::EigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success) throw NotStabilizable("solve_riccati: Hamiltonian eigensolve failed");
  const CVec lam = es.eigenvalues();
  const CMat vec = es.eigenvectors();
  const double tiny = 1e-11 * std::max(1.0, h.cwiseAbs().maxCoeff());
  CMat basis(2 * n, n);
  int count = 0;
  for (int i = 0; i < 2 * n; ++i) {
    if (std::abs(lam(i).real()) < tiny) {
      throw NotStabilizable("solve_riccati: Hamiltonian has imaginary-axis eigenvalues");
    }
    if (lam(i).real() < 0.0 && count < n) basis.col(count++) = vec.col(i);
  }
  if (count != n) throw NotStabilizable("solve_riccati: stable subspace has wrong dimension");
  Eigen::FullPivLU<CMat> u1(basis.topRows(n));
  if (!u1.isInvertible()) throw NotStabilizable("solve_riccati: (A, B) is not stabilizable");
  Mat p = (basis.bottomRows(n) * u1.inverse()).real();
  p = 0.5 * (p + p.transpose()).eval();

  double best = riccati_residual(a, b, q, r, p);
  for (int iter = 0; iter < 20 && best > 1e-13 * std::max(1.0, p.norm()); ++iter) {
    const Mat k = r_llt.solve(b.transpose() * p);
    const Mat ak = a - b * k;
    if (spectral_abscissa(ak) >= 0.0) break;
    Mat next;
    try {
      next = solve_lyapunov(ak, q + k.transpose() * r * k);
    } catch (const NotStabilizable&) {
      break;
    }
    const double res = riccati_residual(a, b, q, r, next);
    if (!(res < best)) break;
    best = res;
    p = next;
  }

  RiccatiSolution sol;
  sol.p = p;
  sol.k = r_llt.solve(b.transpose() * p);
  sol.residual = best;
  if (!(spectral_abscissa(a - b * sol.k) < 0.0)) {
    throw NotStabilizable("solve_riccati: closed loop is not Hurwitz");
  }
  return sol;
}

Mat design_observer(const Mat& a, const Mat& c, const Mat& w, const Mat& v) {
  RiccatiSolution dual;
  try {
    dual = solve_riccati(a.transpose(), c.transpose(), w, v);
  } catch (const NotStabilizable& e) {
    throw NotDetectable(std::string("design_observer: ") + e.what());
  }
  const Mat l = dual.k.transpose();
  if (!(spectral_abscissa(a - l * c) < 0.0)) {
    throw NotDetectable("design_observer: A - L C is not Hurwitz");
  }
  return l;
}

}  // namespace windgrid
