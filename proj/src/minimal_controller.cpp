#include "regsyn/minimal_controller.hpp"

#include "regsyn/internal_model.hpp"
#include "regsyn/numerics.hpp"

#include "excited_subspace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace regsyn {

namespace {

void require_diagonal_exosystem(const Exosystem& exo, const char* who) {
  for (int nk : exo.jordan_sizes) {
    if (nk != 1) {
      throw PreconditionError(std::string(who) +
                              " needs a diagonal signal model (all Jordan "
                              "blocks of size one)");
    }
  }
}

void require_stable_plant(const StateSpace& sys, const char* who) {
  const double alpha = spectral_abscissa(sys.A);
  if (alpha >= 0) {
    std::ostringstream os;
    os << who << " needs an exponentially stable plant; spectral abscissa is "
       << alpha << " (pre-stabilize first)";
    throw PreconditionError(os.str());
  }
}

// Gain blocks and the resulting -(P K0)^* injection blocks for a diagonal
// signal model. Returns K0 (m x q*p) and G2 (q*p x p).
struct GainBlocks {
  Mat k0;
  Mat g2;
};

GainBlocks minimal_gain_blocks(
    const StateSpace& sys, const Exosystem& exo,
    const std::optional<std::vector<Mat>>& k0_blocks) {
  const Eigen::Index p = sys.p();
  const Eigen::Index m = sys.m();
  const Eigen::Index q = static_cast<Eigen::Index>(exo.frequencies.size());
  if (k0_blocks && static_cast<Eigen::Index>(k0_blocks->size()) != q) {
    throw PreconditionError("minimal_controller: expected one K0 block per "
                            "frequency");
  }
  GainBlocks out;
  out.k0 = Mat(m, q * p);
  out.g2 = Mat(q * p, p);
  for (Eigen::Index k = 0; k < q; ++k) {
    const double w = exo.frequencies[static_cast<size_t>(k)];
    Mat pk = transfer_eval(sys, Complex(0, w));
    if (svd_rank(pk).rank < p) {
      std::ostringstream os;
      os << "minimal_controller: the transfer function is not surjective at "
            "the frequency w = "
         << w;
      throw SynthesisError(os.str());
    }
    Mat k0 = k0_blocks ? (*k0_blocks)[static_cast<size_t>(k)] : pinv(pk);
    if (k0.rows() != m || k0.cols() != p) {
      throw PreconditionError("minimal_controller: K0 block " +
                              std::to_string(k) + " must be " +
                              std::to_string(m) + "x" + std::to_string(p) +
                              ", got " + shape_str(k0));
    }
    Mat product = pk * k0;
    if (svd_rank(product).rank < p) {
      std::ostringstream os;
      os << "minimal_controller: P(i w) K0 is singular at w = " << w;
      throw SynthesisError(os.str());
    }
    out.k0.middleCols(k * p, p) = k0;
    out.g2.middleRows(k * p, p) = -product.adjoint();
  }
  return out;
}

Controller assemble_minimal(const StateSpace& sys, const Exosystem& exo,
                            double epsilon, const GainBlocks& blocks) {
  const Eigen::Index p = sys.p();
  std::vector<int> ones(exo.frequencies.size(), 1);
  Controller ctrl;
  ctrl.G1 = build_jordan_internal_model(exo.frequencies, ones, p);
  ctrl.G2 = blocks.g2;
  ctrl.K = epsilon * blocks.k0;
  ctrl.family = "minimal";
  ctrl.parameters["epsilon"] = epsilon;
  return ctrl;
}

void require_hurwitz(const StateSpace& sys, const Controller& ctrl,
                     const Exosystem& exo, double epsilon) {
  ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);
  const double alpha = spectral_abscissa(cl.Ae);
  if (alpha >= 0) {
    std::ostringstream os;
    os << ctrl.family << ": closed loop is not Hurwitz at epsilon = "
       << epsilon << " (spectral abscissa " << alpha
       << "); reduce the gain scale";
    throw SynthesisError(os.str());
  }
}

}  // namespace

Controller minimal_controller(
    const StateSpace& sys, const Exosystem& exo, double epsilon,
    const std::optional<std::vector<Mat>>& k0_blocks) {
  validate(sys);
  validate(exo, sys);
  require_diagonal_exosystem(exo, "minimal_controller");
  require_stable_plant(sys, "minimal_controller");
  if (!(epsilon > 0)) {
    throw PreconditionError("minimal_controller: epsilon must be positive");
  }
  GainBlocks blocks = minimal_gain_blocks(sys, exo, k0_blocks);
  Controller ctrl = assemble_minimal(sys, exo, epsilon, blocks);
  require_hurwitz(sys, ctrl, exo, epsilon);
  return ctrl;
}

double tune_epsilon(const StateSpace& sys, const Exosystem& exo,
                    double epsilon_max, int refinement_steps) {
  validate(sys);
  validate(exo, sys);
  require_diagonal_exosystem(exo, "tune_epsilon");
  require_stable_plant(sys, "tune_epsilon");
  if (!(epsilon_max > 0)) {
    throw PreconditionError("tune_epsilon: epsilon_max must be positive");
  }

  GainBlocks blocks = minimal_gain_blocks(sys, exo, std::nullopt);
  auto hurwitz_at = [&](double eps) {
    Controller ctrl = assemble_minimal(sys, exo, eps, blocks);
    ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);
    return spectral_abscissa(cl.Ae) < 0;
  };
  // Accept eps only when both eps and eps/2 give a Hurwitz loop, so the
  // returned scale sits safely inside the stability interval.
  auto admissible = [&](double eps) {
    return hurwitz_at(eps) && hurwitz_at(eps / 2.0);
  };

  const int max_halvings = 40;
  double eps = epsilon_max;
  int j = 0;
  while (j <= max_halvings && !admissible(eps)) {
    eps /= 2.0;
    ++j;
  }
  if (j > max_halvings) {
    std::ostringstream os;
    os << "tune_epsilon: no Hurwitz gain scale found down to " << epsilon_max
       << " * 2^-" << max_halvings;
    throw SynthesisError(os.str());
  }
  if (j == 0) return epsilon_max;

  double lo = eps;        // admissible
  double hi = 2.0 * eps;  // not admissible
  for (int it = 0; it < refinement_steps; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

StateSpace prestabilize_output_feedback(const StateSpace& sys, double kappa) {
  validate(sys);
  if (sys.m() != sys.p()) {
    throw PreconditionError(
        "prestabilize_output_feedback: the static gain -kappa*I needs as "
        "many inputs as outputs, got m = " +
        std::to_string(sys.m()) + ", p = " + std::to_string(sys.p()));
  }
  const Eigen::Index p = sys.p();
  Mat k1 = -kappa * Mat::Identity(p, p);
  Mat i_minus_dk = Mat::Identity(p, p) - sys.D * k1;
  Eigen::FullPivLU<Mat> lu(i_minus_dk);
  if (!lu.isInvertible()) {
    throw NumericalError(
        "prestabilize_output_feedback: I - D K1 is singular for kappa = " +
        std::to_string(kappa));
  }
  Mat dk_inv_c = lu.solve(sys.C);  // (I - D K1)^{-1} C
  Mat dk_inv_d = lu.solve(sys.D);
  Mat i_minus_kd = Mat::Identity(sys.m(), sys.m()) - k1 * sys.D;

  StateSpace out;
  out.A = sys.A + sys.B * k1 * dk_inv_c;
  out.B = sys.B * i_minus_kd.partialPivLu().inverse();
  out.C = dk_inv_c;
  out.D = dk_inv_d;
  return out;
}

Controller minimal_controller_real(const StateSpace& sys, const Exosystem& exo,
                                   double epsilon) {
  validate(sys);
  validate(exo, sys);
  require_diagonal_exosystem(exo, "minimal_controller_real");
  require_stable_plant(sys, "minimal_controller_real");
  if (!is_real_system(sys)) {
    throw PreconditionError("minimal_controller_real needs a real plant");
  }
  if (!(epsilon > 0)) {
    throw PreconditionError("minimal_controller_real: epsilon must be positive");
  }

  // The frequency list must consist of +/- pairs plus at most one zero.
  std::vector<double> positive;
  bool has_zero = false;
  {
    std::vector<double> pool = exo.frequencies;
    std::sort(pool.begin(), pool.end());
    for (double w : pool) {
      if (w == 0.0) {
        has_zero = true;
        continue;
      }
      if (w < 0.0) {
        if (std::find(pool.begin(), pool.end(), -w) == pool.end()) {
          std::ostringstream os;
          os << "minimal_controller_real: frequency " << w
             << " has no positive partner";
          throw PreconditionError(os.str());
        }
      } else {
        if (std::find(pool.begin(), pool.end(), -w) == pool.end()) {
          std::ostringstream os;
          os << "minimal_controller_real: frequency " << w
             << " has no negative partner";
          throw PreconditionError(os.str());
        }
        positive.push_back(w);
      }
    }
  }

  const Eigen::Index p = sys.p();
  const Eigen::Index m = sys.m();
  const Eigen::Index q = static_cast<Eigen::Index>(positive.size());
  const Eigen::Index dim = 2 * p * q + (has_zero ? p : 0);

  Controller ctrl;
  ctrl.G1 = Mat::Zero(dim, dim);
  ctrl.G2 = Mat::Zero(dim, p);
  ctrl.K = Mat::Zero(m, dim);
  for (Eigen::Index k = 0; k < q; ++k) {
    const double w = positive[static_cast<size_t>(k)];
    Mat pk = transfer_eval(sys, Complex(0, w));
    if (svd_rank(pk).rank < p) {
      std::ostringstream os;
      os << "minimal_controller_real: the transfer function is not "
            "surjective at the frequency w = "
         << w;
      throw SynthesisError(os.str());
    }
    Mat pk_dagger = pinv(pk);
    const Eigen::Index off = 2 * p * k;
    ctrl.G1.block(off, p + off, p, p) = w * Mat::Identity(p, p);
    ctrl.G1.block(p + off, off, p, p) = -w * Mat::Identity(p, p);
    ctrl.G2.block(off, 0, p, p) = -Mat::Identity(p, p);
    ctrl.K.middleCols(off, p) = epsilon * pk_dagger.real().cast<Complex>();
    ctrl.K.middleCols(off + p, p) = epsilon * pk_dagger.imag().cast<Complex>();
  }
  if (has_zero) {
    Mat p0 = transfer_eval(sys, Complex(0, 0));
    if (svd_rank(p0).rank < p) {
      throw SynthesisError(
          "minimal_controller_real: the transfer function is not surjective "
          "at the frequency w = 0");
    }
    const Eigen::Index off = 2 * p * q;
    ctrl.G2.block(off, 0, p, p) = -Mat::Identity(p, p);
    ctrl.K.middleCols(off, p) = epsilon * pinv(p0).real().cast<Complex>();
  }
  ctrl.family = "minimal-real";
  ctrl.parameters["epsilon"] = epsilon;
  require_hurwitz(sys, ctrl, exo, epsilon);
  return ctrl;
}

Controller reduced_order_minimal_controller(
    const StateSpace& sys, const Exosystem& exo,
    const std::vector<PerturbedPlant>& family, double epsilon,
    ReducedOrderInfo* info, RankTolerance tol) {
  validate(sys);
  validate(exo, sys);
  require_diagonal_exosystem(exo, "reduced_order_minimal_controller");
  require_stable_plant(sys, "reduced_order_minimal_controller");
  if (sys.m() != sys.p()) {
    throw PreconditionError(
        "reduced_order_minimal_controller needs an invertible transfer "
        "function, so as many inputs as outputs");
  }
  if (!(epsilon > 0)) {
    throw PreconditionError(
        "reduced_order_minimal_controller: epsilon must be positive");
  }
  const Eigen::Index p = sys.p();
  const Eigen::Index q = static_cast<Eigen::Index>(exo.frequencies.size());
  std::vector<detail::ExcitedSubspace> spans = detail::excited_subspaces(
      exo, family, p, tol, "reduced_order_minimal_controller");

  ReducedOrderInfo local;
  local.full_dim = q * p;
  std::vector<Mat> k0_blocks;
  std::vector<Mat> g2_blocks;
  std::vector<double> kept;
  for (Eigen::Index k = 0; k < q; ++k) {
    const double w = exo.frequencies[static_cast<size_t>(k)];
    const Complex iw(0, w);
    const Eigen::Index pk = spans[static_cast<size_t>(k)].rank;
    if (pk == 0) continue;  // frequency not excited by the family

    Mat pw = transfer_eval(sys, iw);
    if (svd_rank(pw).rank < p) {
      std::ostringstream os;
      os << "reduced_order_minimal_controller: the nominal transfer "
            "function is singular at w = "
         << w;
      throw SynthesisError(os.str());
    }
    Mat k0 = pk < p ? spans[static_cast<size_t>(k)].basis : pinv(pw);
    k0_blocks.push_back(k0);
    g2_blocks.push_back(-(pw * k0).adjoint());
    kept.push_back(w);
    local.subspace_dims.push_back(static_cast<int>(pk));
    local.retained_frequencies.push_back(w);
  }
  if (k0_blocks.empty()) {
    throw SynthesisError(
        "reduced_order_minimal_controller: the family excites none of the "
        "signal model frequencies");
  }

  Eigen::Index dim = 0;
  for (const Mat& k0 : k0_blocks) dim += k0.cols();
  local.reduced_dim = dim;

  Controller ctrl;
  ctrl.G1 = Mat::Zero(dim, dim);
  ctrl.G2 = Mat::Zero(dim, p);
  ctrl.K = Mat::Zero(sys.m(), dim);
  Eigen::Index off = 0;
  for (size_t k = 0; k < k0_blocks.size(); ++k) {
    const Eigen::Index pk = k0_blocks[k].cols();
    ctrl.G1.block(off, off, pk, pk) =
        Complex(0, kept[k]) * Mat::Identity(pk, pk);
    ctrl.G2.middleRows(off, pk) = g2_blocks[k];
    ctrl.K.middleCols(off, pk) = epsilon * k0_blocks[k];
    off += pk;
  }
  ctrl.family = "minimal-reduced";
  ctrl.parameters["epsilon"] = epsilon;
  require_hurwitz(sys, ctrl, exo, epsilon);
  if (info) *info = local;
  return ctrl;
}

}  // namespace regsyn
