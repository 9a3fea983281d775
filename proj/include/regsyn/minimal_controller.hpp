#pragma once

#include "regsyn/state_space.hpp"

#include <optional>
#include <vector>

namespace regsyn {

// Minimal order regulator for an exponentially stable plant and a diagonal
// exosystem: G1 = diag(i w_k I_p), u = eps K0 z, G2^k = -(P(i w_k) K0^k)*.
// Default K0^k is the pseudoinverse of P(i w_k), which makes G2^k = -I.
Controller minimal_controller(
    const StateSpace& sys, const Exosystem& exo, double epsilon,
    const std::optional<std::vector<Mat>>& k0_blocks = std::nullopt);

// Largest gain scale eps on the geometric grid {eps_max * 2^-j}, refined by
// bisection, such that the closed loop is Hurwitz at both eps and eps/2.
double tune_epsilon(const StateSpace& sys, const Exosystem& exo,
                    double epsilon_max = 1.0, int refinement_steps = 20);

// Static output feedback u = -kappa y folded into the plant data:
// (A + B K1 (I - D K1)^{-1} C, B (I - K1 D)^{-1}, (I - D K1)^{-1} C,
//  (I - D K1)^{-1} D) with K1 = -kappa I.
StateSpace prestabilize_output_feedback(const StateSpace& sys, double kappa);

// Real form of the minimal regulator for a real plant and an exosystem with
// paired frequencies (w, -w) plus optionally 0: rotation blocks
// [[0, w I], [-w I, 0]] in G1 and real gains built from Re/Im of the
// transfer pseudoinverses.
Controller minimal_controller_real(const StateSpace& sys, const Exosystem& exo,
                                   double epsilon);

// Dimensions of the reduced internal model chosen per frequency.
struct ReducedOrderInfo {
  std::vector<double> retained_frequencies;
  std::vector<int> subspace_dims;
  Eigen::Index full_dim = 0;
  Eigen::Index reduced_dim = 0;
};

// Minimal regulator whose internal model at frequency w_k only spans the
// subspace of input directions actually excited by the perturbation family:
// span of P~(i w_k)^{-1} (C~ R(i w_k, A~) E~ + F~) e_k over the family.
// Frequencies with an empty subspace are dropped.
Controller reduced_order_minimal_controller(
    const StateSpace& sys, const Exosystem& exo,
    const std::vector<PerturbedPlant>& family, double epsilon,
    ReducedOrderInfo* info = nullptr, RankTolerance tol = {});

}  // namespace regsyn
