#include "regsyn/state_space.hpp"

#include "regsyn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace regsyn {

void validate(const StateSpace& sys) {
  require_square(sys.A, "plant A");
  require_finite(sys.A, "plant A");
  require_finite(sys.B, "plant B");
  require_finite(sys.C, "plant C");
  require_finite(sys.D, "plant D");
  const Eigen::Index n = sys.n();
  if (sys.B.rows() != n) {
    throw PreconditionError("plant B must have " + std::to_string(n) +
                            " rows, got " + shape_str(sys.B));
  }
  if (sys.C.cols() != n) {
    throw PreconditionError("plant C must have " + std::to_string(n) +
                            " columns, got " + shape_str(sys.C));
  }
  if (sys.D.rows() != sys.p() || sys.D.cols() != sys.m()) {
    throw PreconditionError("plant D must be " + std::to_string(sys.p()) +
                            "x" + std::to_string(sys.m()) + ", got " +
                            shape_str(sys.D));
  }
}

bool is_real_system(const StateSpace& sys) {
  return is_real_matrix(sys.A) && is_real_matrix(sys.B) &&
         is_real_matrix(sys.C) && is_real_matrix(sys.D);
}

void validate(const Exosystem& exo) {
  const size_t q = exo.frequencies.size();
  if (q == 0) {
    throw PreconditionError("exosystem needs at least one frequency");
  }
  if (exo.jordan_sizes.size() != q) {
    throw PreconditionError("exosystem has " + std::to_string(q) +
                            " frequencies but " +
                            std::to_string(exo.jordan_sizes.size()) +
                            " jordan sizes");
  }
  Eigen::Index r = 0;
  for (size_t k = 0; k < q; ++k) {
    if (exo.jordan_sizes[k] < 1) {
      throw PreconditionError("exosystem jordan sizes must be >= 1");
    }
    r += exo.jordan_sizes[k];
    for (size_t l = k + 1; l < q; ++l) {
      if (exo.frequencies[k] == exo.frequencies[l]) {
        std::ostringstream os;
        os << "exosystem frequency " << exo.frequencies[k] << " repeats";
        throw PreconditionError(os.str());
      }
    }
  }
  require_square(exo.S, "exosystem S");
  require_finite(exo.S, "exosystem S");
  if (exo.S.rows() != r) {
    throw PreconditionError("exosystem S must be " + std::to_string(r) + "x" +
                            std::to_string(r) + " for the given block sizes, got " +
                            shape_str(exo.S));
  }
  require_finite(exo.E, "exosystem E");
  require_finite(exo.F, "exosystem F");
  if (exo.E.cols() != r || exo.F.cols() != r) {
    throw PreconditionError("exosystem E and F must have " +
                            std::to_string(r) + " columns");
  }

  const double s_scale = std::max(1.0, exo.S.norm());
  const Vec spectrum = eig(exo.S).values;
  if (spectrum.real().cwiseAbs().maxCoeff() > 1e-12 * s_scale) {
    throw PreconditionError(
        "exosystem S has spectrum off the imaginary axis");
  }
  for (size_t k = 0; k < q; ++k) {
    Mat shifted = Complex(0, exo.frequencies[k]) * Mat::Identity(r, r) - exo.S;
    if (svd_rank(shifted).rank != r - 1) {
      std::ostringstream os;
      os << "exosystem eigenvalue i*" << exo.frequencies[k]
         << " must have geometric multiplicity one";
      throw PreconditionError(os.str());
    }
  }
}

void validate(const Exosystem& exo, const StateSpace& sys) {
  validate(exo);
  if (exo.E.rows() != sys.n()) {
    throw PreconditionError("exosystem E must have " +
                            std::to_string(sys.n()) + " rows, got " +
                            shape_str(exo.E));
  }
  if (exo.F.rows() != sys.p()) {
    throw PreconditionError("exosystem F must have " +
                            std::to_string(sys.p()) + " rows, got " +
                            shape_str(exo.F));
  }
}

Exosystem exosystem_from_frequencies(const std::vector<double>& frequencies,
                                     const std::vector<int>& jordan_sizes,
                                     const Mat& e, const Mat& f) {
  Eigen::Index r = 0;
  for (int nk : jordan_sizes) r += nk;
  Mat s = Mat::Zero(r, r);
  Eigen::Index offset = 0;
  for (size_t k = 0; k < jordan_sizes.size(); ++k) {
    const int nk = jordan_sizes[k];
    const Complex iw(0, k < frequencies.size() ? frequencies[k] : 0.0);
    for (int j = 0; j < nk; ++j) {
      s(offset + j, offset + j) = iw;
      if (j + 1 < nk) s(offset + j, offset + j + 1) = Complex(1, 0);
    }
    offset += nk;
  }
  Exosystem exo{frequencies, jordan_sizes, std::move(s), e, f};
  validate(exo);
  return exo;
}

void validate(const Controller& ctrl, const StateSpace& sys) {
  require_square(ctrl.G1, "controller G1");
  require_finite(ctrl.G1, "controller G1");
  require_finite(ctrl.G2, "controller G2");
  require_finite(ctrl.K, "controller K");
  const Eigen::Index nc = ctrl.dim();
  if (ctrl.G2.rows() != nc || ctrl.G2.cols() != sys.p()) {
    throw PreconditionError("controller G2 must be " + std::to_string(nc) +
                            "x" + std::to_string(sys.p()) + ", got " +
                            shape_str(ctrl.G2));
  }
  if (ctrl.K.rows() != sys.m() || ctrl.K.cols() != nc) {
    throw PreconditionError("controller K must be " +
                            std::to_string(sys.m()) + "x" +
                            std::to_string(nc) + ", got " + shape_str(ctrl.K));
  }
}

ClosedLoop assemble_closed_loop(const StateSpace& sys, const Controller& ctrl,
                                const Exosystem& exo) {
  validate(sys);
  validate(ctrl, sys);
  validate(exo, sys);
  const Eigen::Index n = sys.n();
  const Eigen::Index nc = ctrl.dim();
  const Eigen::Index r = exo.r();

  ClosedLoop cl;
  cl.Ae = Mat(n + nc, n + nc);
  cl.Ae << sys.A, sys.B * ctrl.K, ctrl.G2 * sys.C,
      ctrl.G1 + ctrl.G2 * sys.D * ctrl.K;
  cl.Be = Mat(n + nc, r);
  cl.Be << exo.E, ctrl.G2 * exo.F;
  cl.Ce = Mat(sys.p(), n + nc);
  cl.Ce << sys.C, sys.D * ctrl.K;
  cl.De = exo.F;
  return cl;
}

Mat transfer_eval(const StateSpace& sys, Complex lambda) {
  validate(sys);
  const Eigen::Index n = sys.n();
  const Vec spectrum = eig(sys.A).values;
  double dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    dist = std::min(dist, std::abs(lambda - spectrum(i)));
  }
  if (dist <= 1e-10 * std::max(1.0, sys.A.norm())) {
    std::ostringstream os;
    os << "transfer_eval: lambda = " << lambda.real() << "+" << lambda.imag()
       << "i lies within 1e-10 of the spectrum of A";
    throw NumericalError(os.str());
  }
  Mat resolvent_b =
      (lambda * Mat::Identity(n, n) - sys.A).partialPivLu().solve(sys.B);
  return sys.C * resolvent_b + sys.D;
}

double spectral_abscissa(const Mat& m) {
  require_square(m, "spectral_abscissa: M");
  if (m.rows() == 0) {
    throw PreconditionError("spectral_abscissa: empty matrix");
  }
  return eig(m).values.real().maxCoeff();
}

}  // namespace regsyn
