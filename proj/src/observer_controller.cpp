#include "regsyn/observer_controller.hpp"

#include "regsyn/internal_model.hpp"
#include "regsyn/numerics.hpp"
#include "regsyn/stabilize.hpp"

#include <numeric>
#include <sstream>

namespace regsyn {

namespace {

void require_square_plant(const StateSpace& sys, const char* who) {
  if (sys.m() != sys.p()) {
    throw PreconditionError(std::string(who) +
                            " needs as many inputs as outputs, got m = " +
                            std::to_string(sys.m()) + ", p = " +
                            std::to_string(sys.p()));
  }
}

// Plant under state feedback K21: (A + B K21, B, C + D K21, D), whose
// transfer function P_K drives the coupling and gain formulas.
StateSpace fed_plant(const StateSpace& sys, const Mat& k21) {
  StateSpace out;
  out.A = sys.A + sys.B * k21;
  out.B = sys.B;
  out.C = sys.C + sys.D * k21;
  out.D = sys.D;
  return out;
}

std::vector<Mat> default_g2_blocks(const Exosystem& exo, Eigen::Index p) {
  std::vector<Mat> out;
  for (int nk : exo.jordan_sizes) {
    Mat block = Mat::Zero(nk * p, p);
    block.bottomRows(p) = Mat::Identity(p, p);
    out.push_back(block);
  }
  return out;
}

Mat stack_g2(const std::vector<Mat>& blocks, const Exosystem& exo,
             Eigen::Index p, const char* who) {
  if (blocks.size() != exo.frequencies.size()) {
    throw PreconditionError(std::string(who) +
                            ": expected one G2 block per frequency");
  }
  Eigen::Index nc = 0;
  for (size_t k = 0; k < blocks.size(); ++k) {
    const Eigen::Index rows = exo.jordan_sizes[k] * p;
    if (blocks[k].rows() != rows || blocks[k].cols() != p) {
      throw PreconditionError(std::string(who) + ": G2 block " +
                              std::to_string(k) + " must be " +
                              std::to_string(rows) + "x" + std::to_string(p) +
                              ", got " + shape_str(blocks[k]));
    }
    if (svd_rank(Mat(blocks[k].bottomRows(p))).rank < p) {
      std::ostringstream os;
      os << who << ": the last cell of G2 block " << k
         << " must be invertible";
      throw PreconditionError(os.str());
    }
    nc += rows;
  }
  Mat out(nc, p);
  Eigen::Index off = 0;
  for (const Mat& block : blocks) {
    out.middleRows(off, block.rows()) = block;
    off += block.rows();
  }
  return out;
}

Controller finish_observer(const StateSpace& sys, const Exosystem& exo,
                           const Mat& g1, const Mat& g2, const Mat& k1,
                           const Mat& k21, const Mat& l, const Mat& h,
                           const Mat& b1, const std::string& family,
                           ObserverRecord* record) {
  const Eigen::Index n = sys.n();
  const Eigen::Index nc = g1.rows();
  Mat k2 = k21 + k1 * h;
  Mat ck = sys.C + sys.D * k2;

  Controller ctrl;
  ctrl.G1 = Mat::Zero(nc + n, nc + n);
  ctrl.G1.topLeftCorner(nc, nc) = g1;
  ctrl.G1.bottomLeftCorner(n, nc) = (sys.B + l * sys.D) * k1;
  ctrl.G1.bottomRightCorner(n, n) = sys.A + sys.B * k2 + l * ck;
  ctrl.G2 = Mat::Zero(nc + n, sys.p());
  ctrl.G2.topRows(nc) = g2;
  ctrl.G2.bottomRows(n) = -l;
  ctrl.K = Mat::Zero(sys.m(), nc + n);
  ctrl.K.leftCols(nc) = k1;
  ctrl.K.rightCols(n) = k2;
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
    record->K21 = k21;
    record->K2 = k2;
    record->L = l;
    record->H = h;
    record->B1 = b1;
  }
  return ctrl;
}

struct ObserverGains {
  Mat k21;
  Mat l;
  StateSpace fed;
};

ObserverGains observer_gains(const StateSpace& sys,
                             const std::optional<Mat>& k21_opt,
                             const std::optional<Mat>& l_opt,
                             const char* who) {
  ObserverGains out;
  out.k21 = k21_opt ? *k21_opt : lqr_gain(sys.A, sys.B);
  if (out.k21.rows() != sys.m() || out.k21.cols() != sys.n()) {
    throw PreconditionError(std::string(who) + ": K21 must be " +
                            std::to_string(sys.m()) + "x" +
                            std::to_string(sys.n()) + ", got " +
                            shape_str(out.k21));
  }
  if (spectral_abscissa(sys.A + sys.B * out.k21) >= 0) {
    throw PreconditionError(std::string(who) +
                            ": K21 does not make A + B K21 Hurwitz");
  }
  out.l = l_opt ? *l_opt : output_injection_gain(sys.A, sys.C);
  if (out.l.rows() != sys.n() || out.l.cols() != sys.p()) {
    throw PreconditionError(std::string(who) + ": L must be " +
                            std::to_string(sys.n()) + "x" +
                            std::to_string(sys.p()) + ", got " +
                            shape_str(out.l));
  }
  if (spectral_abscissa(sys.A + out.l * sys.C) >= 0) {
    throw PreconditionError(std::string(who) +
                            ": L does not make A + L C Hurwitz");
  }
  out.fed = fed_plant(sys, out.k21);
  return out;
}

void check_transfer_invertible(const StateSpace& sys, const Exosystem& exo,
                               const char* who) {
  const Eigen::Index p = sys.p();
  for (double w : exo.frequencies) {
    Mat pw = transfer_eval(sys, Complex(0, w));
    if (svd_rank(pw).rank < p) {
      std::ostringstream os;
      os << who << ": the transfer function is not invertible at the "
            "frequency w = "
         << w;
      throw SynthesisError(os.str());
    }
  }
}

}  // namespace

Mat observer_coupling_matrix(const Mat& a, const Mat& c, const Mat& g2,
                             const std::vector<double>& frequencies,
                             const std::vector<int>& jordan_sizes) {
  require_square(a, "observer_coupling_matrix: A");
  require_finite(a, "observer_coupling_matrix: A");
  require_finite(c, "observer_coupling_matrix: C");
  require_finite(g2, "observer_coupling_matrix: G2");
  if (frequencies.empty() || frequencies.size() != jordan_sizes.size()) {
    throw PreconditionError(
        "observer_coupling_matrix: frequency and Jordan size lists must be "
        "nonempty and of equal length");
  }
  for (int nk : jordan_sizes) {
    if (nk < 1) {
      throw PreconditionError(
          "observer_coupling_matrix: Jordan sizes must be positive");
    }
  }
  if (c.cols() != a.cols()) {
    throw PreconditionError(
        "observer_coupling_matrix: A and C column counts differ");
  }
  const Eigen::Index p = c.rows();
  const int total =
      std::accumulate(jordan_sizes.begin(), jordan_sizes.end(), 0);
  if (g2.rows() != p * total || g2.cols() != p) {
    throw PreconditionError(
        "observer_coupling_matrix: G2 must be (p * total Jordan length) x p");
  }

  const Eigen::Index n = a.rows();
  EigResult spectrum = eig(a);
  const double scale = std::max(1.0, a.norm());
  for (double w : frequencies) {
    const Complex iw(0, w);
    const double gap = (spectrum.values.array() - iw).abs().minCoeff();
    if (gap <= 1e-10 * scale) {
      std::ostringstream os;
      os << "observer_coupling_matrix: i*w is in the spectrum of A for w = "
         << w;
      throw NumericalError(os.str());
    }
  }

  // Row block recurrence up each Jordan chain:
  // H^{n_k} (iw - A) = G2^{k,n_k} C, H^l (iw - A) = G2^{kl} C - H^{l+1}.
  Mat h(g2.rows(), n);
  Eigen::Index off = 0;
  for (size_t k = 0; k < frequencies.size(); ++k) {
    const Complex iw(0, frequencies[k]);
    Eigen::PartialPivLU<Mat> lu(
        Mat((iw * Mat::Identity(n, n) - a).transpose()));
    const int nk = jordan_sizes[k];
    for (int l = nk - 1; l >= 0; --l) {
      Mat rhs = g2.middleRows(off + l * p, p) * c;
      if (l + 1 < nk) rhs -= h.middleRows(off + (l + 1) * p, p);
      h.middleRows(off + l * p, p) =
          lu.solve(rhs.transpose()).transpose();
    }
    off += p * nk;
  }
  return h;
}

Controller observer_controller(
    const StateSpace& sys, const Exosystem& exo,
    const std::optional<Mat>& k21_opt, const std::optional<Mat>& l_opt,
    const std::optional<std::vector<Mat>>& g2_blocks, ObserverRecord* record) {
  const char* who = "observer_controller";
  validate(sys);
  validate(exo, sys);
  require_square_plant(sys, who);
  ObserverGains gains = observer_gains(sys, k21_opt, l_opt, who);
  check_transfer_invertible(sys, exo, who);

  const Eigen::Index p = sys.p();
  Mat g1 = build_jordan_internal_model(exo.frequencies, exo.jordan_sizes, p);
  Mat g2 = stack_g2(g2_blocks ? *g2_blocks : default_g2_blocks(exo, p), exo,
                    p, who);
  Mat h = observer_coupling_matrix(gains.fed.A, gains.fed.C, g2,
                                   exo.frequencies, exo.jordan_sizes);
  Mat b1 = h * sys.B + g2 * sys.D;
  Mat k1;
  try {
    k1 = lqr_gain(g1, b1);
  } catch (const SynthesisError& err) {
    throw SynthesisError(std::string(who) +
                         ": (G1, B1) stabilizability failed, likely a "
                         "numerical rank problem: " +
                         err.what());
  }
  return finish_observer(sys, exo, g1, g2, k1, gains.k21, gains.l, h, b1,
                         "observer", record);
}

Controller observer_controller_diag(
    const StateSpace& sys, const Exosystem& exo,
    const std::optional<Mat>& k21_opt, const std::optional<Mat>& l_opt,
    const std::optional<std::vector<Mat>>& g2_blocks, ObserverRecord* record) {
  const char* who = "observer_controller_diag";
  validate(sys);
  validate(exo, sys);
  require_square_plant(sys, who);
  for (int nk : exo.jordan_sizes) {
    if (nk != 1) {
      throw PreconditionError(std::string(who) +
                              " needs a diagonal signal model");
    }
  }
  ObserverGains gains = observer_gains(sys, k21_opt, l_opt, who);
  check_transfer_invertible(sys, exo, who);

  const Eigen::Index p = sys.p();
  const Eigen::Index q = static_cast<Eigen::Index>(exo.frequencies.size());
  std::vector<Mat> blocks;
  if (g2_blocks) {
    blocks = *g2_blocks;
  } else {
    // inv(P_K(i w_k)) = (I - K21 R(i w_k, A) B) inv(P(i w_k)), which turns
    // B1 into stacked identities.
    for (Eigen::Index k = 0; k < q; ++k) {
      const Complex iw(0, exo.frequencies[static_cast<size_t>(k)]);
      Mat pk = transfer_eval(gains.fed, iw);
      Eigen::FullPivLU<Mat> lu(pk);
      if (!lu.isInvertible()) {
        std::ostringstream os;
        os << who << ": the stabilized transfer function is singular at "
              "w = "
           << exo.frequencies[static_cast<size_t>(k)];
        throw SynthesisError(os.str());
      }
      blocks.push_back(lu.inverse());
    }
  }
  Mat g2 = stack_g2(blocks, exo, p, who);
  Mat h = observer_coupling_matrix(gains.fed.A, gains.fed.C, g2,
                                   exo.frequencies, exo.jordan_sizes);
  Mat b1 = h * sys.B + g2 * sys.D;
  Mat k1 = -b1.adjoint();

  InternalModelSpec spec = internal_model_spec(exo, p);
  Mat g1 = build_jordan_internal_model(exo.frequencies, exo.jordan_sizes, p);
  AdjointFeedbackReport rep = check_adjoint_feedback_stability(g1, b1, spec);
  if (!rep.stable) {
    throw SynthesisError(std::string(who) +
                         ": G1 - B1 B1* is not Hurwitz, a B1 block lost "
                         "rank");
  }
  return finish_observer(sys, exo, g1, g2, k1, gains.k21, gains.l, h, b1,
                         "observer-diag", record);
}

}  // namespace regsyn
