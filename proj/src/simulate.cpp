#include "regsyn/simulate.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace regsyn {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559005768;

// 53 bit uniform in [0, 1) taken straight from the engine words so the
// stream does not depend on standard library distribution internals.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Eigen::Index grid_steps(double t_final, double dt) {
  return static_cast<Eigen::Index>(std::floor(t_final / dt + 1e-9));
}

}  // namespace

SimResult simulate(const ClosedLoop& cl, const Exosystem& exo, const Vec& xe0,
                   const Vec& v0, double t_final, double dt) {
  if (!(dt > 0.0)) {
    throw PreconditionError("simulate: dt must be positive");
  }
  if (!(t_final >= dt)) {
    throw PreconditionError("simulate: t_final must be at least dt");
  }
  const Eigen::Index r = exo.S.rows();
  const Eigen::Index ne = cl.Ae.rows();
  const Eigen::Index pe = cl.Ce.rows();
  if (cl.Ae.cols() != ne || cl.Be.rows() != ne || cl.Be.cols() != r ||
      cl.Ce.cols() != ne || cl.De.rows() != pe || cl.De.cols() != r) {
    throw PreconditionError("simulate: closed loop blocks are inconsistent");
  }
  if (xe0.size() != ne || v0.size() != r) {
    throw PreconditionError("simulate: initial state sizes do not match");
  }

  Mat m = Mat::Zero(r + ne, r + ne);
  m.topLeftCorner(r, r) = exo.S;
  m.bottomLeftCorner(ne, r) = cl.Be;
  m.bottomRightCorner(ne, ne) = cl.Ae;
  const Mat phi = (dt * m).exp();
  if (!all_finite(phi)) {
    throw NumericalError("simulate: exp(dt M) produced non-finite entries");
  }

  const Eigen::Index steps = grid_steps(t_final, dt);
  const Eigen::Index cols = steps + 1;

  SimResult out;
  out.t = RealVec::Zero(cols);
  out.v = Mat::Zero(r, cols);
  out.x = Mat::Zero(ne, cols);
  out.y = Mat::Zero(pe, cols);
  out.y_ref = Mat::Zero(pe, cols);
  out.e = Mat::Zero(pe, cols);

  Vec w(r + ne);
  w << v0, xe0;
  for (Eigen::Index j = 0; j < cols; ++j) {
    out.t(j) = static_cast<double>(j) * dt;
    out.v.col(j) = w.head(r);
    out.x.col(j) = w.tail(ne);
    out.e.col(j) = cl.Ce * w.tail(ne) + cl.De * w.head(r);
    out.y_ref.col(j) = -exo.F * w.head(r);
    out.y.col(j) = out.e.col(j) + out.y_ref.col(j);
    if (j + 1 < cols) w = phi * w;
  }

  const double t_end = out.t(cols - 1);
  const DecayFit fit = fit_decay(out, 0.5 * t_end, t_end);
  out.alpha_hat = fit.alpha_hat;
  out.r_squared = fit.r_squared;

  out.terminal_error = 0.0;
  const double t_tail = 0.75 * t_end - 1e-9;
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (out.t(j) < t_tail) continue;
    out.terminal_error =
        std::max(out.terminal_error, out.e.col(j).cwiseAbs().maxCoeff());
  }
  return out;
}

DecayFit fit_decay(const SimResult& sim, double t_start, double t_end) {
  if (sim.t.size() < 2) {
    throw PreconditionError("fit_decay: trajectory has fewer than two points");
  }
  if (!(t_start < t_end)) {
    throw PreconditionError("fit_decay: window must satisfy t_start < t_end");
  }
  const double lo = sim.t(0);
  const double hi = sim.t(sim.t.size() - 1);
  const double slack = 1e-9 * std::max(1.0, std::abs(hi));
  if (t_start < lo - slack || t_end > hi + slack) {
    throw PreconditionError("fit_decay: window [" + std::to_string(t_start) +
                            ", " + std::to_string(t_end) +
                            "] falls outside the grid");
  }

  std::vector<double> ts, logs;
  Eigen::Index in_window = 0;
  for (Eigen::Index j = 0; j < sim.t.size(); ++j) {
    const double t = sim.t(j);
    if (t < t_start - slack || t > t_end + slack) continue;
    ++in_window;
    const double n = sim.e.col(j).norm();
    if (n <= 0.0) continue;
    const double l = std::log(n);
    if (!std::isfinite(l)) continue;
    ts.push_back(t);
    logs.push_back(l);
  }
  if (in_window < 2) {
    throw PreconditionError("fit_decay: window covers fewer than two points");
  }

  DecayFit fit;
  fit.points = static_cast<int>(ts.size());
  if (ts.size() < 2) {
    // Error already at numerical zero on the window.
    fit.alpha_hat = std::numeric_limits<double>::infinity();
    fit.r_squared = 1.0;
    return fit;
  }

  const auto n = static_cast<double>(ts.size());
  double t_mean = 0.0, l_mean = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    t_mean += ts[i];
    l_mean += logs[i];
  }
  t_mean /= n;
  l_mean /= n;
  double stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double dt = ts[i] - t_mean;
    const double dl = logs[i] - l_mean;
    stt += dt * dt;
    stl += dt * dl;
    sll += dl * dl;
  }
  const double slope = stl / stt;
  fit.alpha_hat = -slope;
  const double ss_res = sll - slope * stl;
  fit.r_squared =
      (sll > 0.0) ? std::min(1.0, std::max(0.0, 1.0 - ss_res / sll)) : 1.0;
  return fit;
}

Mat perturb_matrix(const Mat& m, double delta, std::uint64_t seed) {
  if (delta < 0.0) {
    throw PreconditionError("perturb_matrix: delta must be >= 0");
  }
  if (delta == 0.0 || m.size() == 0) return m;
  std::mt19937_64 rng(seed);
  Mat shift(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      shift(i, j) = delta * standard_normal(rng) * m(i, j);
    }
  }
  const double cap = delta * m.norm();
  const double got = shift.norm();
  if (got > cap && got > 0.0) shift *= cap / got;
  return m + shift;
}

PerturbedPlant sample_perturbation(const StateSpace& sys, const Exosystem& exo,
                                   double delta, std::uint64_t seed) {
  PerturbedPlant out;
  out.plant.A = perturb_matrix(sys.A, delta, seed * 8 + 1);
  out.plant.B = perturb_matrix(sys.B, delta, seed * 8 + 2);
  out.plant.C = perturb_matrix(sys.C, delta, seed * 8 + 3);
  out.plant.D = perturb_matrix(sys.D, delta, seed * 8 + 4);
  out.E = perturb_matrix(exo.E, delta, seed * 8 + 5);
  out.F = perturb_matrix(exo.F, delta, seed * 8 + 6);
  return out;
}

SweepReport robustness_sweep(const StateSpace& sys, const Controller& ctrl,
                             const Exosystem& exo, double delta, int samples,
                             std::uint64_t seed, double t_final, double dt,
                             double terminal_tol) {
  if (samples < 0) {
    throw PreconditionError("robustness_sweep: samples must be >= 0");
  }
  SweepReport report;
  report.delta = delta;
  report.samples = samples;
  report.seed = seed;
  report.terminal_tol = terminal_tol;
  report.entries.reserve(static_cast<std::size_t>(samples));

  for (int i = 0; i < samples; ++i) {
    SweepSample entry;
    entry.seed = seed + static_cast<std::uint64_t>(i);
    const PerturbedPlant drawn =
        sample_perturbation(sys, exo, delta, entry.seed);
    Exosystem drawn_exo = exo;
    drawn_exo.E = drawn.E;
    drawn_exo.F = drawn.F;
    const ClosedLoop cl = assemble_closed_loop(drawn.plant, ctrl, drawn_exo);
    entry.abscissa = spectral_abscissa(cl.Ae);
    entry.hurwitz = entry.abscissa < 0.0;
    if (entry.hurwitz) {
      ++report.n_hurwitz;
      const SimResult sim =
          simulate(cl, drawn_exo, Vec::Zero(cl.Ae.rows()),
                   Vec::Ones(exo.S.rows()), t_final, dt);
      entry.alpha_hat = sim.alpha_hat;
      entry.terminal_error = sim.terminal_error;
      entry.tracking = sim.terminal_error < terminal_tol;
      if (entry.tracking) ++report.n_tracking;
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace regsyn
