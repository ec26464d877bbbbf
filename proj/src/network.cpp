#include "windgrid/network.hpp"

#include <algorithm>
#include <cmath>

#include "windgrid/errors.hpp"

namespace windgrid {

namespace {

double symmetry_error(const CMat& y) { return (y - y.transpose()).cwiseAbs().maxCoeff(); }

void check_square(const CMat& y, const char* what) {
  if (y.rows() != y.cols()) {
    throw DimensionMismatch(std::string(what) + " admittance is not square");
  }
}

}  // namespace

NetworkModel::NetworkModel(CMat y_nominal, CMat y_faulted)
    : y_nominal_(std::move(y_nominal)), y_faulted_(std::move(y_faulted)) {
  check_square(y_nominal_, "nominal");
  check_square(y_faulted_, "faulted");
  if (y_nominal_.rows() < 2) {
    throw DimensionMismatch("network needs at least two generating units");
  }
  if (y_faulted_.rows() != y_nominal_.rows()) {
    throw DimensionMismatch("nominal and faulted admittances differ in size");
  }
  const double scale = std::max(1.0, y_nominal_.cwiseAbs().maxCoeff());
  if (symmetry_error(y_nominal_) > 1e-9 * scale || symmetry_error(y_faulted_) > 1e-9 * scale) {
    throw DimensionMismatch("admittance matrices must be symmetric");
  }
}

Vec balance_residual(const BusVoltages& v, const PowerInjections& e, const CMat& y) {
  const auto n = v.size();
  if (y.rows() != n || y.cols() != n || e.size() != n) {
    throw DimensionMismatch("balance_residual: sizes of v, e and Y disagree");
  }
  const CVec mismatch = e - ((y * v).conjugate().array() * v.array()).matrix();
  Vec r(2 * n);
  r.head(n) = mismatch.real();
  r.tail(n) = mismatch.imag();
  return r;
}

Vec balance_residual(const BusVoltages& v, const InjectionMap& injections_of_v,
                     const NetworkModel& net, bool faulted) {
  return balance_residual(v, injections_of_v(v), net.admittance(faulted));
}

NetworkSolution solve_network(const UnitInjection& injection, const NetworkModel& net,
                              const BusVoltages& guess, bool faulted,
                              const NetworkSolveOptions& opts) {
  const CMat& y = net.admittance(faulted);
  const int n = net.n_units();
  if (guess.size() != n) {
    throw DimensionMismatch("solve_network: guess has wrong length");
  }
  if ((guess.array().abs() <= 0.0).any()) {
    throw SingularVoltage("solve_network: guess has a zero entry");
  }

  BusVoltages v = guess;
  CVec e(n);
  auto residual = [&](const BusVoltages& vv) {
    for (int k = 0; k < n; ++k) e(k) = injection(k, vv(k));
    return balance_residual(vv, e, y);
  };

  NetworkSolution sol;
  Mat jac(2 * n, 2 * n);
  bool polishing = false;
  for (int iter = 1; iter <= opts.max_iter + 1; ++iter) {
    const Vec r = residual(v);
    sol.iterations = iter;
    sol.residual = r.cwiseAbs().maxCoeff();
    if (!std::isfinite(sol.residual)) {
      throw NoConvergence("solve_network: residual is not finite");
    }
    if (sol.residual < opts.tol && opts.polish && !polishing) {
      polishing = true;
    } else if (sol.residual < opts.tol || polishing) {
      if ((v.array().abs() < opts.min_voltage).any()) {
        throw NoConvergence("solve_network: voltage collapse");
      }
      sol.v = v;
      return sol;
    }
    if (iter > opts.max_iter) break;

    // S_k = v_k conj(sum_j Y_kj v_j); dS/dx_j and dS/dy_j from the Wirtinger pair.
    const CVec yv_conj = (y * v).conjugate();
    jac.setZero();
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < n; ++j) {
        Complex ds_dv = (k == j) ? yv_conj(k) : Complex(0.0, 0.0);
        const Complex ds_dvbar = v(k) * std::conj(y(k, j));
        const Complex ds_dx = ds_dv + ds_dvbar;
        const Complex ds_dy = Complex(0.0, 1.0) * (ds_dv - ds_dvbar);
        jac(k, j) = -ds_dx.real();
        jac(n + k, j) = -ds_dx.imag();
        jac(k, n + j) = -ds_dy.real();
        jac(n + k, n + j) = -ds_dy.imag();
      }
      const double h = 1e-7 * std::max(1.0, std::abs(v(k)));
      const Complex dex = (injection(k, v(k) + h) - injection(k, v(k) - h)) / (2.0 * h);
      const Complex dey =
          (injection(k, v(k) + Complex(0.0, h)) - injection(k, v(k) - Complex(0.0, h))) / (2.0 * h);
      jac(k, k) += dex.real();
      jac(n + k, k) += dex.imag();
      jac(k, n + k) += dey.real();
      jac(n + k, n + k) += dey.imag();
    }

    Eigen::FullPivLU<Mat> lu(jac);
    if (!lu.isInvertible()) {
      throw SingularJacobian("solve_network: singular power-balance Jacobian");
    }
    const Vec dz = lu.solve(-r);
    // Backtrack so the iterate stays on the branch it started from.
    const double r_norm = r.norm();
    double step = 1.0;
    BusVoltages trial(n);
    for (int half = 0; half < 12; ++half) {
      for (int k = 0; k < n; ++k) trial(k) = v(k) + step * Complex(dz(k), dz(n + k));
      const double t_norm = residual(trial).norm();
      if (std::isfinite(t_norm) && t_norm < r_norm) break;
      step *= 0.5;
    }
    v = trial;
  }
  throw NoConvergence("solve_network: no convergence within " + std::to_string(opts.max_iter) +
                      " iterations (residual " + std::to_string(sol.residual) + ")");
}

CMat kron_reduce(const CMat& full_y, const CVec& load_admittances, const std::vector<int>& keep) {
  const int nb = static_cast<int>(full_y.rows());
  if (full_y.cols() != nb || load_admittances.size() != nb) {
    throw DimensionMismatch("kron_reduce: sizes of Y and load vector disagree");
  }
  std::vector<bool> kept(nb, false);
  for (int k : keep) {
    if (k < 0 || k >= nb || kept[k]) throw DimensionMismatch("kron_reduce: bad keep list");
    kept[k] = true;
  }
  std::vector<int> elim;
  for (int k = 0; k < nb; ++k) {
    if (!kept[k]) elim.push_back(k);
  }

  CMat y = full_y;
  y.diagonal() += load_admittances;

  const auto nk = static_cast<Eigen::Index>(keep.size());
  const auto ne = static_cast<Eigen::Index>(elim.size());
  CMat ykk(nk, nk), yke(nk, ne), yek(ne, nk), yee(ne, ne);
  for (Eigen::Index a = 0; a < nk; ++a) {
    for (Eigen::Index b = 0; b < nk; ++b) ykk(a, b) = y(keep[a], keep[b]);
    for (Eigen::Index b = 0; b < ne; ++b) yke(a, b) = y(keep[a], elim[b]);
  }
  for (Eigen::Index a = 0; a < ne; ++a) {
    for (Eigen::Index b = 0; b < nk; ++b) yek(a, b) = y(elim[a], keep[b]);
    for (Eigen::Index b = 0; b < ne; ++b) yee(a, b) = y(elim[a], elim[b]);
  }
  if (ne == 0) return ykk;

  Eigen::FullPivLU<CMat> lu(yee);
  if (!lu.isInvertible()) {
    throw SingularBlock("kron_reduce: eliminated block is singular");
  }
  CMat reduced = ykk - yke * lu.solve(yek);
  // Restore exact reciprocity lost to round-off.
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  return reduced;
}

CMat bus_admittance(const NetworkDescription& desc, const std::string& scaled_branch,
                    double scale) {
  CMat y = CMat::Zero(desc.n_buses, desc.n_buses);
  bool found = scaled_branch.empty();
  for (const Branch& br : desc.branches) {
    if (br.from < 0 || br.to < 0 || br.from >= desc.n_buses || br.to >= desc.n_buses) {
      throw DimensionMismatch("branch " + br.id + " references an unknown bus");
    }
    double s = 1.0;
    if (!scaled_branch.empty() && br.id == scaled_branch) {
      s = scale;
      found = true;
    }
    const Complex ys = s / br.z;
    const Complex ysh(0.0, s * br.b_total / 2.0);
    y(br.from, br.from) += ys + ysh;
    y(br.to, br.to) += ys + ysh;
    y(br.from, br.to) -= ys;
    y(br.to, br.from) -= ys;
  }
  if (!found) {
    throw DimensionMismatch("fault branch '" + scaled_branch + "' does not exist");
  }
  return y;
}

NetworkModel reduce_network(const NetworkDescription& desc) {
  const CMat y_nom = bus_admittance(desc);
  const CMat y_flt = desc.fault.branch.empty()
                         ? y_nom
                         : bus_admittance(desc, desc.fault.branch, desc.fault.scale);
  return NetworkModel(kron_reduce(y_nom, desc.load_admittances, desc.unit_buses),
                      kron_reduce(y_flt, desc.load_admittances, desc.unit_buses));
}

}  // namespace windgrid
