#pragma once

#include "regsyn/state_space.hpp"

#include <optional>
#include <vector>

namespace regsyn {

// Intermediate operators of the triangular synthesis, kept for diagnostics
// and tests: the coupling solve H, the regulated output map C1 = C H + D K1,
// the gains, and the internal model pair (G1, G2).
struct TriangularRecord {
  Mat G1, G2, K1, K2, L1, L, H, C1;
};

// Coupling matrix H solving H G1 = A H + B K1 column block by column block,
// where G1 is the Jordan internal model for the given frequencies. A must
// not have eigenvalues at any i*w_k.
Mat triangular_coupling_matrix(const Mat& a, const Mat& b, const Mat& k1,
                               const std::vector<double>& frequencies,
                               const std::vector<int>& jordan_sizes);

// Regulator with a Jordan internal model cascaded with a stabilized plant
// copy:
//   GG1 = [[G1, G2 (C + D K2)], [0, A + B K2 + L (C + D K2)]],
//   GG2 = (G2; L), K = (K1, -K2).
// K2 and L1 default to Riccati gains; G2 defaults to an output injection
// making G1 + G2 C1 Hurwitz. The closed loop is verified Hurwitz.
Controller triangular_controller(const StateSpace& sys, const Exosystem& exo,
                                 const std::optional<Mat>& k2 = std::nullopt,
                                 const std::optional<Mat>& l1 = std::nullopt,
                                 TriangularRecord* record = nullptr);

// Closed-form variant for a diagonal exosystem and invertible P(i w_k):
// K1^k = pinv(P_L(i w_k)) and G2 = -C1^*, which gives G2^k = -I blocks and
// stability of G1 + G2 C1 by the adjoint feedback argument.
Controller triangular_controller_diag(const StateSpace& sys,
                                      const Exosystem& exo,
                                      const std::optional<Mat>& k2 = std::nullopt,
                                      const std::optional<Mat>& l1 = std::nullopt,
                                      TriangularRecord* record = nullptr);

// Reduced order variant for a diagonal exosystem: the internal model block
// for w_k only spans the input directions excited by the perturbation
// family, K1^k is a basis of that subspace (or pinv(P(i w_k)) when full),
// and G2^k = -(P_L(i w_k) K1^k)*.
Controller triangular_controller_reduced(
    const StateSpace& sys, const Exosystem& exo,
    const std::vector<PerturbedPlant>& family,
    const std::optional<Mat>& k2 = std::nullopt,
    const std::optional<Mat>& l1 = std::nullopt,
    TriangularRecord* record = nullptr, RankTolerance tol = {});

}  // namespace regsyn
