#pragma once

#include "regsyn/state_space.hpp"

namespace regsyn {

// Spectral Galerkin model of heat flow on the unit square with Neumann
// boundary: flux control on Gamma_1 = [0,1/2] x {0} and
// Gamma_2 = [1/2,1] x {1}, outputs are the mean temperatures over the same
// segments. Basis: cos(m pi x1) cos(n pi x2), 0 <= m, n < modes_per_axis.
struct HeatModelConfig {
  int modes_per_axis = 10;
  double kappa = 1.0;  // output feedback gain folded in at build time
};

struct HeatPlant {
  StateSpace raw;         // modal system before feedback
  StateSpace stabilized;  // with u = -kappa y + u_new folded in
};

HeatPlant build_heat_plant(const HeatModelConfig& cfg);

// Benchmark signal model: frequencies (-pi, 0, pi), S = diag(-i pi, 0, i pi),
// E = 0 and F chosen so that -F exp(St) (1,1,1) = (-1, cos(pi t)).
Exosystem benchmark_exosystem(Eigen::Index state_dim);

}  // namespace regsyn
