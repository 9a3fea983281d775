#pragma once

#include "regsyn/state_space.hpp"

#include <vector>

namespace regsyn {

// What a controller must replicate: the exosystem frequencies, their Jordan
// block sizes, and the output dimension p.
struct InternalModelSpec {
  std::vector<double> frequencies;
  std::vector<int> jordan_sizes;
  Eigen::Index p = 0;
};

InternalModelSpec internal_model_spec(const Exosystem& exo, Eigen::Index p);

// Block diagonal G1 with one p-fold Jordan block stack per frequency:
// the block for w_k has n_k rows/cols of p x p cells, i*w_k*I on the cell
// diagonal and I on the cell superdiagonal. Dimension p * sum(n_k).
Mat build_jordan_internal_model(const std::vector<double>& frequencies,
                                const std::vector<int>& jordan_sizes,
                                Eigen::Index p);

// Rank diagnostics for the three internal model conditions at one frequency:
//   (a) ran(i w_k - G1) intersects ran(G2) trivially,
//   (b) G2 is injective,
//   (c) ker((i w_k - G1)^{n_k - 1}) sits inside ran(i w_k - G1).
// A rank gap of zero means the condition holds.
struct FrequencyConditionReport {
  double frequency = 0.0;
  bool range_intersection_trivial = false;
  bool g2_injective = false;
  bool kernel_inside_range = false;
  int rank_gap_intersection = 0;
  int rank_gap_injectivity = 0;
  int rank_gap_kernel = 0;
};

struct GConditionsReport {
  std::vector<FrequencyConditionReport> per_frequency;
  bool pass = false;
};

GConditionsReport check_g_conditions(const Mat& g1, const Mat& g2,
                                     const InternalModelSpec& spec,
                                     RankTolerance tol = {});

// Jordan chain census of G1 at each exosystem frequency: the internal model
// contains a p-copy when ker(i w_k - G1) has dimension >= p and at least p
// chains of length >= n_k exist.
struct PCopyReport {
  std::vector<int> kernel_dims;
  std::vector<int> long_chain_counts;
  bool pass = false;
};

PCopyReport check_p_copy(const Mat& g1, const InternalModelSpec& spec,
                         RankTolerance tol = {});

// Feedback invariance: if S is diagonal and ker(i w_k - G1) lies inside
// ker(K) for every k, the pair (G1 + G2 K, G2) inherits the internal model
// conditions from (G1, G2).
struct FeedbackInvarianceReport {
  bool applicable = false;  // diagonal S, (G1, G2) pass, kernels inside ker K
  GConditionsReport before_feedback;
  GConditionsReport after_feedback;
};

FeedbackInvarianceReport check_feedback_invariance(const Mat& g1, const Mat& g2,
                                                   const Mat& k,
                                                   const InternalModelSpec& spec,
                                                   RankTolerance tol = {});

// For block diagonal G1 = diag(i w_k I_p) with every p x p block of G2
// invertible, the adjoint output injection makes G1 - G2 G2* Hurwitz.
struct AdjointFeedbackReport {
  std::vector<bool> block_invertible;
  double abscissa = 0.0;
  bool stable = false;
};

AdjointFeedbackReport check_adjoint_feedback_stability(
    const Mat& g1, const Mat& g2, const InternalModelSpec& spec,
    RankTolerance tol = {});

// Full certificate: closed-loop stability plus the internal model conditions
// and the p-copy census for the controller pair (G1, G2).
struct RorpCertificate {
  bool hurwitz = false;
  double abscissa = 0.0;
  GConditionsReport g_conditions;
  PCopyReport p_copy;
  bool pass = false;
};

RorpCertificate certify_rorp(const StateSpace& sys, const Controller& ctrl,
                             const Exosystem& exo, RankTolerance tol = {});

}  // namespace regsyn
