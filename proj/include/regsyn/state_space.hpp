#pragma once

#include "regsyn/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace regsyn {

// Plant x' = Ax + Bu + Ew, y = Cx + Du + Fw. The exosystem couplings E, F
// live in Exosystem so one plant can be paired with several signal models.
struct StateSpace {
  Mat A, B, C, D;

  Eigen::Index n() const { return A.rows(); }  // states
  Eigen::Index m() const { return B.cols(); }  // inputs
  Eigen::Index p() const { return C.rows(); }  // outputs
};

void validate(const StateSpace& sys);

// True when A, B, C, D all have exactly zero imaginary parts.
bool is_real_system(const StateSpace& sys);

// Signal generator v' = Sv, S block diagonal with one Jordan block of size
// n_k and eigenvalue i*w_k per frequency. E and F couple v into the plant
// state and output equations.
struct Exosystem {
  std::vector<double> frequencies;
  std::vector<int> jordan_sizes;
  Mat S;
  Mat E;  // n x r
  Mat F;  // p x r

  Eigen::Index r() const { return S.rows(); }
};

void validate(const Exosystem& exo);
void validate(const Exosystem& exo, const StateSpace& sys);

Exosystem exosystem_from_frequencies(const std::vector<double>& frequencies,
                                     const std::vector<int>& jordan_sizes,
                                     const Mat& e, const Mat& f);

// Error feedback controller z' = G1 z + G2 e, u = K z.
struct Controller {
  Mat G1, G2, K;
  std::string family;
  std::map<std::string, double> parameters;

  Eigen::Index dim() const { return G1.rows(); }
};

void validate(const Controller& ctrl, const StateSpace& sys);

// Closed loop in the coordinates (x, z):
//   d/dt (x, z) = Ae (x, z) + Be v,   e = Ce (x, z) + De v.
struct ClosedLoop {
  Mat Ae, Be, Ce, De;
};

ClosedLoop assemble_closed_loop(const StateSpace& sys, const Controller& ctrl,
                                const Exosystem& exo);

// P(lambda) = C (lambda I - A)^{-1} B + D. Rejects lambda too close to the
// spectrum of A for the resolvent to be trustworthy.
Mat transfer_eval(const StateSpace& sys, Complex lambda);

double spectral_abscissa(const Mat& m);

// One admissible data perturbation: a perturbed plant plus perturbed
// exosystem couplings.
struct PerturbedPlant {
  StateSpace plant;
  Mat E, F;
};

}  // namespace regsyn
