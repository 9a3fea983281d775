#include "regsyn/internal_model.hpp"

#include "regsyn/numerics.hpp"

#include <algorithm>
#include <sstream>

namespace regsyn {

namespace {

void validate_spec(const InternalModelSpec& spec) {
  if (spec.p < 1) {
    throw PreconditionError("internal model spec needs p >= 1");
  }
  if (spec.frequencies.empty() ||
      spec.frequencies.size() != spec.jordan_sizes.size()) {
    throw PreconditionError(
        "internal model spec needs matching frequency and size lists");
  }
  for (int nk : spec.jordan_sizes) {
    if (nk < 1) throw PreconditionError("internal model block sizes must be >= 1");
  }
}

Mat matrix_power(const Mat& m, int k) {
  Mat acc = Mat::Identity(m.rows(), m.cols());
  for (int i = 0; i < k; ++i) acc = acc * m;
  return acc;
}

bool spec_is_diagonal(const InternalModelSpec& spec) {
  return std::all_of(spec.jordan_sizes.begin(), spec.jordan_sizes.end(),
                     [](int nk) { return nk == 1; });
}

}  // namespace

InternalModelSpec internal_model_spec(const Exosystem& exo, Eigen::Index p) {
  InternalModelSpec spec{exo.frequencies, exo.jordan_sizes, p};
  validate_spec(spec);
  return spec;
}

Mat build_jordan_internal_model(const std::vector<double>& frequencies,
                                const std::vector<int>& jordan_sizes,
                                Eigen::Index p) {
  InternalModelSpec spec{frequencies, jordan_sizes, p};
  validate_spec(spec);
  Eigen::Index dim = 0;
  for (int nk : jordan_sizes) dim += p * nk;
  Mat g1 = Mat::Zero(dim, dim);
  Eigen::Index offset = 0;
  for (size_t k = 0; k < frequencies.size(); ++k) {
    const Complex iw(0, frequencies[k]);
    const int nk = jordan_sizes[k];
    for (int j = 0; j < nk; ++j) {
      g1.block(offset + j * p, offset + j * p, p, p) =
          iw * Mat::Identity(p, p);
      if (j + 1 < nk) {
        g1.block(offset + j * p, offset + (j + 1) * p, p, p) =
            Mat::Identity(p, p);
      }
    }
    offset += p * nk;
  }
  return g1;
}

GConditionsReport check_g_conditions(const Mat& g1, const Mat& g2,
                                     const InternalModelSpec& spec,
                                     RankTolerance tol) {
  validate_spec(spec);
  require_square(g1, "check_g_conditions: G1");
  require_finite(g1, "check_g_conditions: G1");
  require_finite(g2, "check_g_conditions: G2");
  const Eigen::Index nc = g1.rows();
  if (g2.rows() != nc || g2.cols() != spec.p) {
    throw PreconditionError("check_g_conditions: G2 must be " +
                            std::to_string(nc) + "x" +
                            std::to_string(spec.p) + ", got " + shape_str(g2));
  }

  const int rank_g2 = svd_rank(g2, tol).rank;
  GConditionsReport report;
  report.pass = true;
  for (size_t k = 0; k < spec.frequencies.size(); ++k) {
    FrequencyConditionReport fr;
    fr.frequency = spec.frequencies[k];
    const Complex iw(0, spec.frequencies[k]);
    Mat shifted = iw * Mat::Identity(nc, nc) - g1;

    // ran(i w - G1) and ran(G2) intersect trivially exactly when the ranks
    // add up across the concatenation.
    SvdRankResult shifted_rank = svd_rank(shifted, tol);
    Mat concat(nc, nc + spec.p);
    concat << shifted, g2;
    const int rank_concat = svd_rank(concat, tol).rank;
    fr.rank_gap_intersection = shifted_rank.rank + rank_g2 - rank_concat;
    fr.range_intersection_trivial = fr.rank_gap_intersection == 0;

    fr.rank_gap_injectivity = static_cast<int>(spec.p) - rank_g2;
    fr.g2_injective = fr.rank_gap_injectivity == 0;

    const int nk = spec.jordan_sizes[k];
    if (nk == 1) {
      fr.rank_gap_kernel = 0;  // ker of the identity power is trivial
      fr.kernel_inside_range = true;
    } else {
      Mat power = matrix_power(shifted, nk - 1);
      Mat kernel = svd_rank(power, tol).null_basis;
      if (kernel.cols() == 0) {
        fr.rank_gap_kernel = 0;
        fr.kernel_inside_range = true;
      } else {
        Mat aug(nc, shifted_rank.rank + kernel.cols());
        aug << shifted_rank.range_basis, kernel;
        fr.rank_gap_kernel = svd_rank(aug, tol).rank - shifted_rank.rank;
        fr.kernel_inside_range = fr.rank_gap_kernel == 0;
      }
    }

    report.pass = report.pass && fr.range_intersection_trivial &&
                  fr.g2_injective && fr.kernel_inside_range;
    report.per_frequency.push_back(fr);
  }
  return report;
}

PCopyReport check_p_copy(const Mat& g1, const InternalModelSpec& spec,
                         RankTolerance tol) {
  validate_spec(spec);
  require_square(g1, "check_p_copy: G1");
  require_finite(g1, "check_p_copy: G1");
  const Eigen::Index nc = g1.rows();

  PCopyReport report;
  report.pass = true;
  for (size_t k = 0; k < spec.frequencies.size(); ++k) {
    const Complex iw(0, spec.frequencies[k]);
    const int nk = spec.jordan_sizes[k];
    Mat shifted = g1 - iw * Mat::Identity(nc, nc);

    const int kernel_dim = static_cast<int>(nc) - svd_rank(shifted, tol).rank;
    // Jordan chains of length >= nk: rank drop between consecutive powers.
    const int rank_low =
        nk == 1 ? static_cast<int>(nc)
                : svd_rank(matrix_power(shifted, nk - 1), tol).rank;
    const int rank_high = svd_rank(matrix_power(shifted, nk), tol).rank;
    const int long_chains = rank_low - rank_high;

    report.kernel_dims.push_back(kernel_dim);
    report.long_chain_counts.push_back(long_chains);
    report.pass = report.pass && kernel_dim >= spec.p && long_chains >= spec.p;
  }
  return report;
}

FeedbackInvarianceReport check_feedback_invariance(const Mat& g1,
                                                   const Mat& g2, const Mat& k,
                                                   const InternalModelSpec& spec,
                                                   RankTolerance tol) {
  validate_spec(spec);
  require_square(g1, "check_feedback_invariance: G1");
  const Eigen::Index nc = g1.rows();
  if (k.cols() != nc) {
    throw PreconditionError("check_feedback_invariance: K must have " +
                            std::to_string(nc) + " columns, got " +
                            shape_str(k));
  }

  FeedbackInvarianceReport report;
  report.before_feedback = check_g_conditions(g1, g2, spec, tol);

  bool kernels_unseen = true;
  const double k_scale = std::max(1.0, k.norm());
  for (double w : spec.frequencies) {
    Mat shifted = Complex(0, w) * Mat::Identity(nc, nc) - g1;
    Mat kernel = svd_rank(shifted, tol).null_basis;
    if (kernel.cols() > 0 && (k * kernel).norm() > 1e-9 * k_scale) {
      kernels_unseen = false;
    }
  }
  report.applicable =
      spec_is_diagonal(spec) && report.before_feedback.pass && kernels_unseen;
  report.after_feedback = check_g_conditions(g1 + g2 * k, g2, spec, tol);
  return report;
}

AdjointFeedbackReport check_adjoint_feedback_stability(
    const Mat& g1, const Mat& g2, const InternalModelSpec& spec,
    RankTolerance tol) {
  validate_spec(spec);
  if (!spec_is_diagonal(spec)) {
    throw PreconditionError(
        "check_adjoint_feedback_stability needs a diagonal signal model");
  }
  const Eigen::Index p = spec.p;
  const Eigen::Index q = static_cast<Eigen::Index>(spec.frequencies.size());
  Mat expected = build_jordan_internal_model(
      spec.frequencies, spec.jordan_sizes, p);
  require_square(g1, "check_adjoint_feedback_stability: G1");
  if (g1.rows() != q * p ||
      (g1 - expected).norm() > 1e-12 * std::max(1.0, expected.norm())) {
    throw PreconditionError(
        "check_adjoint_feedback_stability: G1 must equal diag(i w_k I_p)");
  }
  if (g2.rows() != q * p || g2.cols() != p) {
    throw PreconditionError(
        "check_adjoint_feedback_stability: G2 must be " +
        std::to_string(q * p) + "x" + std::to_string(p) + ", got " +
        shape_str(g2));
  }

  AdjointFeedbackReport report;
  for (Eigen::Index k = 0; k < q; ++k) {
    Mat block = g2.middleRows(k * p, p);
    report.block_invertible.push_back(svd_rank(block, tol).rank == p);
  }
  report.abscissa = spectral_abscissa(g1 - g2 * g2.adjoint());
  report.stable = report.abscissa < 0;
  return report;
}

RorpCertificate certify_rorp(const StateSpace& sys, const Controller& ctrl,
                             const Exosystem& exo, RankTolerance tol) {
  ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);
  RorpCertificate cert;
  cert.abscissa = spectral_abscissa(cl.Ae);
  cert.hurwitz = cert.abscissa < 0;
  InternalModelSpec spec = internal_model_spec(exo, sys.p());
  cert.g_conditions = check_g_conditions(ctrl.G1, ctrl.G2, spec, tol);
  cert.p_copy = check_p_copy(ctrl.G1, spec, tol);
  cert.pass = cert.hurwitz && cert.g_conditions.pass && cert.p_copy.pass;
  return cert;
}

}  // namespace regsyn
