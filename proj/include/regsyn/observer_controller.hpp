#pragma once

#include "regsyn/state_space.hpp"

#include <optional>
#include <vector>

namespace regsyn {

// Intermediate operators of the observer-based synthesis: the coupling
// solve H, the input map B1 = H B + G2 D, and the gains.
struct ObserverRecord {
  Mat G1, G2, K1, K21, K2, L, H, B1;
};

// Coupling matrix H solving G1 H = H A + G2 C row block by row block,
// where G1 is the Jordan internal model for the given frequencies and the
// blocks of G2 are laid out to match. A must not have eigenvalues at any
// i*w_k.
Mat observer_coupling_matrix(const Mat& a, const Mat& c, const Mat& g2,
                             const std::vector<double>& frequencies,
                             const std::vector<int>& jordan_sizes);

// Observer-based regulator for plants with as many inputs as outputs:
//   GG1 = [[G1, 0], [(B + L D) K1, A + B K2 + L (C + D K2)]],
//   GG2 = (G2; -L), K = (K1, K2), K2 = K21 + K1 H.
// K21 and L default to Riccati gains, G2 blocks default to identity at the
// last cell of each frequency, and K1 makes G1 + B1 K1 Hurwitz. The closed
// loop is verified Hurwitz.
Controller observer_controller(
    const StateSpace& sys, const Exosystem& exo,
    const std::optional<Mat>& k21 = std::nullopt,
    const std::optional<Mat>& l = std::nullopt,
    const std::optional<std::vector<Mat>>& g2_blocks = std::nullopt,
    ObserverRecord* record = nullptr);

// Closed-form variant for a diagonal exosystem and invertible P(i w_k):
// K1 = -B1^* with no Riccati solve, and G1 + B1 K1 = G1 - B1 B1^* is
// Hurwitz by the adjoint feedback argument. The default
// G2^k = (I - K21 R(i w_k, A) B) inv(P(i w_k)) = inv(P_K(i w_k)) makes
// B1^k = I, so K1 = (-I, ..., -I).
Controller observer_controller_diag(
    const StateSpace& sys, const Exosystem& exo,
    const std::optional<Mat>& k21 = std::nullopt,
    const std::optional<Mat>& l = std::nullopt,
    const std::optional<std::vector<Mat>>& g2_blocks = std::nullopt,
    ObserverRecord* record = nullptr);

}  // namespace regsyn
