#pragma once

#include "regsyn/state_space.hpp"

#include <cstdint>
#include <vector>

namespace regsyn {

// Trajectories on the uniform grid t(j) = j * dt, stored one column per
// grid point.
struct SimResult {
  RealVec t;
  Mat v;      // exosystem state, r columns of size r... one column per time
  Mat x;      // closed-loop state (x, z)
  Mat y;      // plant output
  Mat y_ref;  // reference -F v
  Mat e;      // tracking error y - y_ref
  double alpha_hat = 0.0;       // fitted decay rate of ||e||
  double r_squared = 0.0;       // quality of the decay fit
  double terminal_error = 0.0;  // max ||e(t)||_inf over the last quarter
};

// Propagates d/dt (v, xe) = [[S, 0], [Be, Ae]] (v, xe) with one fixed
// exp(dt * M) step operator. Fills the decay fit over [t_final/2, t_final].
SimResult simulate(const ClosedLoop& cl, const Exosystem& exo, const Vec& xe0,
                   const Vec& v0, double t_final, double dt);

struct DecayFit {
  double alpha_hat = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

// Least squares fit of log||e(t)|| over [t_start, t_end]; alpha_hat is the
// negated slope. Returns +inf alpha when the error has already reached
// numerical zero on the window.
DecayFit fit_decay(const SimResult& sim, double t_start, double t_end);

// Entrywise relative Gaussian perturbation: each entry moves by about
// delta * |entry|, with the whole matrix rescaled if needed so that
// ||perturbation||_F <= delta * ||M||_F. Deterministic in the seed.
Mat perturb_matrix(const Mat& m, double delta, std::uint64_t seed);

PerturbedPlant sample_perturbation(const StateSpace& sys, const Exosystem& exo,
                                   double delta, std::uint64_t seed);

struct SweepSample {
  std::uint64_t seed = 0;
  bool hurwitz = false;
  double abscissa = 0.0;
  double alpha_hat = 0.0;
  double terminal_error = 0.0;
  bool tracking = false;
};

struct SweepReport {
  double delta = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
  double terminal_tol = 0.0;
  int n_hurwitz = 0;
  int n_tracking = 0;
  std::vector<SweepSample> entries;
};

// Draws `samples` data perturbations (per-sample seed = seed + index),
// re-assembles the closed loop with the same controller, and simulates the
// stable ones. A sample is "tracking" when its terminal error stays below
// terminal_tol.
SweepReport robustness_sweep(const StateSpace& sys, const Controller& ctrl,
                             const Exosystem& exo, double delta, int samples,
                             std::uint64_t seed, double t_final = 16.0,
                             double dt = 0.01, double terminal_tol = 0.05);

}  // namespace regsyn
