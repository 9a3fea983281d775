#include "regsyn/triangular_controller.hpp"

#include "regsyn/internal_model.hpp"
#include "regsyn/numerics.hpp"
#include "regsyn/stabilize.hpp"

#include "excited_subspace.hpp"

#include <numeric>
#include <sstream>

namespace regsyn {

namespace {

void check_jordan_data(const std::vector<double>& frequencies,
                       const std::vector<int>& jordan_sizes) {
  if (frequencies.empty() || frequencies.size() != jordan_sizes.size()) {
    throw PreconditionError(
        "triangular_coupling_matrix: frequency and Jordan size lists must be "
        "nonempty and of equal length");
  }
  for (int nk : jordan_sizes) {
    if (nk < 1) {
      throw PreconditionError(
          "triangular_coupling_matrix: Jordan sizes must be positive");
    }
  }
}

Mat stabilizing_state_gain(const StateSpace& sys,
                           const std::optional<Mat>& k2, const char* who) {
  Mat out = k2 ? *k2 : lqr_gain(sys.A, sys.B);
  if (out.rows() != sys.m() || out.cols() != sys.n()) {
    throw PreconditionError(std::string(who) + ": K2 must be " +
                            std::to_string(sys.m()) + "x" +
                            std::to_string(sys.n()) + ", got " +
                            shape_str(out));
  }
  if (spectral_abscissa(sys.A + sys.B * out) >= 0) {
    throw PreconditionError(std::string(who) +
                            ": K2 does not make A + B K2 Hurwitz");
  }
  return out;
}

Mat stabilizing_injection_gain(const StateSpace& sys,
                               const std::optional<Mat>& l1,
                               const char* who) {
  Mat out = l1 ? *l1 : output_injection_gain(sys.A, sys.C);
  if (out.rows() != sys.n() || out.cols() != sys.p()) {
    throw PreconditionError(std::string(who) + ": L1 must be " +
                            std::to_string(sys.n()) + "x" +
                            std::to_string(sys.p()) + ", got " +
                            shape_str(out));
  }
  if (spectral_abscissa(sys.A + out * sys.C) >= 0) {
    throw PreconditionError(std::string(who) +
                            ": L1 does not make A + L1 C Hurwitz");
  }
  return out;
}

// Plant under output injection L1: (A + L1 C, B + L1 D, C, D), whose
// transfer function P_L appears in the gain and coupling computations.
StateSpace injected_plant(const StateSpace& sys, const Mat& l1) {
  StateSpace out;
  out.A = sys.A + l1 * sys.C;
  out.B = sys.B + l1 * sys.D;
  out.C = sys.C;
  out.D = sys.D;
  return out;
}

// Final assembly shared by all variants: the internal model pair (g1, g2)
// with gain k1 is cascaded with a stabilized observer-like plant copy.
Controller finish_triangular(const StateSpace& sys, const Exosystem& exo,
                             const Mat& g1, const Mat& g2, const Mat& k1,
                             const Mat& k2, const Mat& l1, const Mat& h,
                             const Mat& c1, const std::string& family,
                             TriangularRecord* record) {
  const Eigen::Index n = sys.n();
  const Eigen::Index nc = g1.rows();
  Mat l = l1 + h * g2;
  Mat ck = sys.C + sys.D * k2;

  Controller ctrl;
  ctrl.G1 = Mat::Zero(nc + n, nc + n);
  ctrl.G1.topLeftCorner(nc, nc) = g1;
  ctrl.G1.topRightCorner(nc, n) = g2 * ck;
  ctrl.G1.bottomRightCorner(n, n) = sys.A + sys.B * k2 + l * ck;
  ctrl.G2 = Mat::Zero(nc + n, sys.p());
  ctrl.G2.topRows(nc) = g2;
  ctrl.G2.bottomRows(n) = l;
  ctrl.K = Mat::Zero(sys.m(), nc + n);
  ctrl.K.leftCols(nc) = k1;
  ctrl.K.rightCols(n) = -k2;
  ctrl.family = family;

  ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);
  const double alpha = spectral_abscissa(cl.Ae);
  if (alpha >= 0) {
    std::ostringstream os;
    os << family << ": closed loop is not Hurwitz (spectral abscissa "
       << alpha << ")";
    throw SynthesisError(os.str());
  }
  if (record) {
    record->G1 = g1;
    record->G2 = g2;
    record->K1 = k1;
    record->K2 = k2;
    record->L1 = l1;
    record->L = l;
    record->H = h;
    record->C1 = c1;
  }
  return ctrl;
}

Controller triangular_common(const StateSpace& sys, const Exosystem& exo,
                             const std::optional<Mat>& k2_opt,
                             const std::optional<Mat>& l1_opt, bool diag_g2,
                             TriangularRecord* record) {
  const char* who = diag_g2 ? "triangular_controller_diag"
                            : "triangular_controller";
  validate(sys);
  validate(exo, sys);
  if (diag_g2) {
    for (int nk : exo.jordan_sizes) {
      if (nk != 1) {
        throw PreconditionError(std::string(who) +
                                " needs a diagonal signal model");
      }
    }
  }
  Mat k2 = stabilizing_state_gain(sys, k2_opt, who);
  Mat l1 = stabilizing_injection_gain(sys, l1_opt, who);
  StateSpace inj = injected_plant(sys, l1);

  const Eigen::Index p = sys.p();
  const Eigen::Index m = sys.m();
  const int total = std::accumulate(exo.jordan_sizes.begin(),
                                    exo.jordan_sizes.end(), 0);
  const Eigen::Index nc = p * total;

  // First cell of each frequency block carries the gain; later cells in a
  // Jordan chain are free and set to zero.
  Mat k1 = Mat::Zero(m, nc);
  Eigen::Index off = 0;
  for (size_t k = 0; k < exo.frequencies.size(); ++k) {
    const double w = exo.frequencies[k];
    const Complex iw(0, w);
    Mat source = transfer_eval(diag_g2 ? inj : sys, iw);
    if (svd_rank(source).rank < p) {
      std::ostringstream os;
      os << who << ": the transfer function is not surjective at the "
            "frequency w = "
         << w;
      throw SynthesisError(os.str());
    }
    Mat k1k = pinv(source);
    Mat pl = transfer_eval(inj, iw);
    if (svd_rank(pl * k1k).rank < p) {
      std::ostringstream os;
      os << who << ": P_L(i w) K1 is singular at w = " << w;
      throw SynthesisError(os.str());
    }
    k1.middleCols(off, p) = k1k;
    off += p * exo.jordan_sizes[k];
  }

  Mat h = triangular_coupling_matrix(inj.A, inj.B, k1, exo.frequencies,
                                     exo.jordan_sizes);
  Mat c1 = sys.C * h + sys.D * k1;
  Mat g1 = build_jordan_internal_model(exo.frequencies, exo.jordan_sizes, p);

  Mat g2;
  if (diag_g2) {
    g2 = -c1.adjoint();
    InternalModelSpec spec = internal_model_spec(exo, p);
    AdjointFeedbackReport rep =
        check_adjoint_feedback_stability(g1, -g2, spec);
    if (!rep.stable) {
      throw SynthesisError(std::string(who) +
                           ": G1 - C1* C1 is not Hurwitz, the stabilized "
                           "transfer function blocks lost rank");
    }
  } else {
    try {
      g2 = output_injection_gain(g1, c1);
    } catch (const SynthesisError& err) {
      throw SynthesisError(
          std::string(who) +
          ": (C1, G1) detectability failed, likely a numerical rank "
          "problem: " +
          err.what());
    }
  }
  return finish_triangular(sys, exo, g1, g2, k1, k2, l1, h, c1,
                           diag_g2 ? "triangular-diag" : "triangular",
                           record);
}

}  // namespace

Mat triangular_coupling_matrix(const Mat& a, const Mat& b, const Mat& k1,
                               const std::vector<double>& frequencies,
                               const std::vector<int>& jordan_sizes) {
  require_square(a, "triangular_coupling_matrix: A");
  require_finite(a, "triangular_coupling_matrix: A");
  require_finite(b, "triangular_coupling_matrix: B");
  require_finite(k1, "triangular_coupling_matrix: K1");
  check_jordan_data(frequencies, jordan_sizes);
  if (b.rows() != a.rows()) {
    throw PreconditionError(
        "triangular_coupling_matrix: A and B row counts differ");
  }
  const int total =
      std::accumulate(jordan_sizes.begin(), jordan_sizes.end(), 0);
  if (k1.cols() % total != 0) {
    throw PreconditionError(
        "triangular_coupling_matrix: K1 column count is not a multiple of "
        "the total Jordan length");
  }
  const Eigen::Index p = k1.cols() / total;
  if (k1.rows() != b.cols()) {
    throw PreconditionError(
        "triangular_coupling_matrix: K1 rows must match B columns");
  }

  const Eigen::Index n = a.rows();
  EigResult spectrum = eig(a);
  const double scale = std::max(1.0, a.norm());
  for (double w : frequencies) {
    const Complex iw(0, w);
    const double gap =
        (spectrum.values.array() - iw).abs().minCoeff();
    if (gap <= 1e-10 * scale) {
      std::ostringstream os;
      os << "triangular_coupling_matrix: i*w is in the spectrum of A for "
            "w = "
         << w;
      throw NumericalError(os.str());
    }
  }

  // Column block recurrence down each Jordan chain:
  // (iw - A) H^1 = B K1^{k,1}, (iw - A) H^l = B K1^{k,l} - H^{l-1}.
  Mat h(n, k1.cols());
  Eigen::Index off = 0;
  for (size_t k = 0; k < frequencies.size(); ++k) {
    const Complex iw(0, frequencies[k]);
    Eigen::PartialPivLU<Mat> lu(iw * Mat::Identity(n, n) - a);
    for (int l = 0; l < jordan_sizes[k]; ++l) {
      Mat rhs = b * k1.middleCols(off + l * p, p);
      if (l > 0) rhs -= h.middleCols(off + (l - 1) * p, p);
      h.middleCols(off + l * p, p) = lu.solve(rhs);
    }
    off += p * jordan_sizes[k];
  }
  return h;
}

Controller triangular_controller(const StateSpace& sys, const Exosystem& exo,
                                 const std::optional<Mat>& k2,
                                 const std::optional<Mat>& l1,
                                 TriangularRecord* record) {
  return triangular_common(sys, exo, k2, l1, false, record);
}

Controller triangular_controller_diag(const StateSpace& sys,
                                      const Exosystem& exo,
                                      const std::optional<Mat>& k2,
                                      const std::optional<Mat>& l1,
                                      TriangularRecord* record) {
  return triangular_common(sys, exo, k2, l1, true, record);
}

Controller triangular_controller_reduced(const StateSpace& sys,
                                         const Exosystem& exo,
                                         const std::vector<PerturbedPlant>& family,
                                         const std::optional<Mat>& k2_opt,
                                         const std::optional<Mat>& l1_opt,
                                         TriangularRecord* record,
                                         RankTolerance tol) {
  const char* who = "triangular_controller_reduced";
  validate(sys);
  validate(exo, sys);
  for (int nk : exo.jordan_sizes) {
    if (nk != 1) {
      throw PreconditionError(std::string(who) +
                              " needs a diagonal signal model");
    }
  }
  if (sys.m() != sys.p()) {
    throw PreconditionError(std::string(who) +
                            " needs an invertible transfer function, so as "
                            "many inputs as outputs");
  }
  const Eigen::Index p = sys.p();
  Mat k2 = stabilizing_state_gain(sys, k2_opt, who);
  Mat l1 = stabilizing_injection_gain(sys, l1_opt, who);
  StateSpace inj = injected_plant(sys, l1);

  std::vector<detail::ExcitedSubspace> spans =
      detail::excited_subspaces(exo, family, p, tol, who);

  std::vector<Mat> k1_blocks;
  std::vector<double> kept;
  for (size_t k = 0; k < exo.frequencies.size(); ++k) {
    const double w = exo.frequencies[k];
    const Eigen::Index pk = spans[k].rank;
    if (pk == 0) continue;
    const Complex iw(0, w);
    Mat k1k;
    if (pk < p) {
      k1k = spans[k].basis;
    } else {
      Mat pw = transfer_eval(sys, iw);
      if (svd_rank(pw).rank < p) {
        std::ostringstream os;
        os << who << ": the transfer function is singular at w = " << w;
        throw SynthesisError(os.str());
      }
      k1k = pinv(pw);
    }
    Mat pl = transfer_eval(inj, iw);
    if (svd_rank(pl * k1k).rank < pk) {
      std::ostringstream os;
      os << who << ": P_L(i w) K1 lost rank at w = " << w;
      throw SynthesisError(os.str());
    }
    k1_blocks.push_back(k1k);
    kept.push_back(w);
  }
  if (k1_blocks.empty()) {
    throw SynthesisError(std::string(who) +
                         ": the family excites none of the signal model "
                         "frequencies");
  }

  Eigen::Index nc = 0;
  for (const Mat& blk : k1_blocks) nc += blk.cols();
  const Eigen::Index n = sys.n();
  Mat g1 = Mat::Zero(nc, nc);
  Mat k1 = Mat::Zero(sys.m(), nc);
  Mat h = Mat::Zero(n, nc);
  Eigen::Index off = 0;
  for (size_t k = 0; k < k1_blocks.size(); ++k) {
    const Eigen::Index pk = k1_blocks[k].cols();
    const Complex iw(0, kept[k]);
    g1.block(off, off, pk, pk) = iw * Mat::Identity(pk, pk);
    k1.middleCols(off, pk) = k1_blocks[k];
    h.middleCols(off, pk) =
        (iw * Mat::Identity(n, n) - inj.A)
            .partialPivLu()
            .solve(Mat(inj.B * k1_blocks[k]));
    off += pk;
  }
  Mat c1 = sys.C * h + sys.D * k1;
  Mat g2 = -c1.adjoint();
  if (spectral_abscissa(g1 + g2 * c1) >= 0) {
    throw SynthesisError(std::string(who) +
                         ": G1 - C1* C1 is not Hurwitz, the reduced basis "
                         "lost rank through P_L");
  }
  return finish_triangular(sys, exo, g1, g2, k1, k2, l1, h, c1,
                           "triangular-reduced", record);
}

}  // namespace regsyn
