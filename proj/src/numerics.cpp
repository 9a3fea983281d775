#include "regsyn/numerics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace regsyn {

namespace {

std::string cplx_str(const Complex& z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
  return os.str();
}

}  // namespace

EigResult eig(const Mat& m) {
  require_square(m, "eig: M");
  require_finite(m, "eig: M");
  if (m.rows() == 0) {
    return {Vec(0), Mat(0, 0)};
  }
  Eigen::ComplexEigenSolver<Mat> solver(m, true);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eig: eigenvalue iteration failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

SvdRankResult svd_rank(const Mat& m, RankTolerance tol) {
  require_finite(m, "svd_rank: M");
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  if (rows == 0 || cols == 0) {
    SvdRankResult r;
    r.singular_values = RealVec(0);
    r.range_basis = Mat::Zero(rows, 0);
    r.null_basis = Mat::Identity(cols, cols);
    return r;
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RealVec& sv = svd.singularValues();
  const double cutoff = tol.rel * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  SvdRankResult r;
  r.rank = rank;
  r.singular_values = sv;
  r.range_basis = svd.matrixU().leftCols(rank);
  r.null_basis = svd.matrixV().rightCols(cols - rank);
  return r;
}

Mat pinv(const Mat& m, RankTolerance tol) {
  require_finite(m, "pinv: M");
  if (m.rows() == 0 || m.cols() == 0) {
    return Mat::Zero(m.cols(), m.rows());
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVec& sv = svd.singularValues();
  const double cutoff = tol.rel * sv(0);
  RealVec inv_sv = RealVec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().adjoint();
}

Mat expm(const Mat& m) {
  require_square(m, "expm: M");
  require_finite(m, "expm: M");
  if (m.rows() == 0) return Mat(0, 0);
  return m.exp();
}

Mat sylvester_generic(const Mat& a, const Mat& b, const Mat& c) {
  require_square(a, "sylvester_generic: A");
  require_square(b, "sylvester_generic: B");
  require_finite(c, "sylvester_generic: C");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.rows();
  if (c.rows() != n || c.cols() != m) {
    throw PreconditionError("sylvester_generic: C must be " +
                            std::to_string(n) + "x" + std::to_string(m) +
                            ", got " + shape_str(c));
  }
  if (n == 0 || m == 0) return Mat::Zero(n, m);

  const Vec eig_a = eig(a).values;
  const Vec eig_b = eig(b).values;
  const double scale =
      std::max(1.0, a.norm() + b.norm());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::abs(eig_a(i) - eig_b(j)) <= 1e-12 * scale) {
        throw NumericalError(
            "sylvester_generic: A and B share the eigenvalue " +
            cplx_str(eig_a(i)) + "; the equation X*B - A*X = C is singular");
      }
    }
  }

  // Bartels-Stewart on complex Schur forms: A = Ua Ta Ua*, B = Ub Tb Ub*.
  Eigen::ComplexSchur<Mat> schur_a(a, true);
  Eigen::ComplexSchur<Mat> schur_b(b, true);
  if (schur_a.info() != Eigen::Success || schur_b.info() != Eigen::Success) {
    throw NumericalError("sylvester_generic: Schur decomposition failed");
  }
  const Mat& ta = schur_a.matrixT();
  const Mat& tb = schur_b.matrixT();
  const Mat& ua = schur_a.matrixU();
  const Mat& ub = schur_b.matrixU();

  Mat chat = ua.adjoint() * c * ub;
  Mat y = Mat::Zero(n, m);
  // Column sweep: (tb(j,j) I - Ta) y_j = chat_j - sum_{i<j} tb(i,j) y_i.
  for (Eigen::Index j = 0; j < m; ++j) {
    Vec rhs = chat.col(j);
    for (Eigen::Index i = 0; i < j; ++i) {
      rhs -= tb(i, j) * y.col(i);
    }
    Mat lhs = -ta;
    lhs.diagonal().array() += tb(j, j);
    y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  return ua * y * ub.adjoint();
}

namespace {

// Unitarily swaps the adjacent diagonal entries k and k+1 of the complex
// Schur factor t, accumulating the transformation into u.
void schur_swap(Mat& t, Mat& u, Eigen::Index k) {
  const Complex t11 = t(k, k);
  const Complex t12 = t(k, k + 1);
  const Complex t22 = t(k + 1, k + 1);
  // (t12, t22 - t11) is an eigenvector of [[t11,t12],[0,t22]] for t22.
  const Complex v1 = t12;
  const Complex v2 = t22 - t11;
  const double nv = std::sqrt(std::norm(v1) + std::norm(v2));
  if (nv <= 0.0) return;  // equal eigenvalues, swap is a no-op
  Mat q(2, 2);
  q << v1 / nv, -std::conj(v2) / nv, v2 / nv, std::conj(v1) / nv;
  t.middleCols(k, 2) = t.middleCols(k, 2) * q;
  t.middleRows(k, 2) = q.adjoint() * t.middleRows(k, 2);
  u.middleCols(k, 2) = u.middleCols(k, 2) * q;
  t(k + 1, k) = Complex(0, 0);
}

}  // namespace

Mat care_solve(const Mat& a, const Mat& b, const Mat& q, const Mat& r) {
  require_square(a, "care_solve: A");
  require_finite(a, "care_solve: A");
  require_finite(b, "care_solve: B");
  require_square(q, "care_solve: Q");
  require_square(r, "care_solve: R");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (b.rows() != n) {
    throw PreconditionError("care_solve: B must have " + std::to_string(n) +
                            " rows, got " + shape_str(b));
  }
  if (q.rows() != n) {
    throw PreconditionError("care_solve: Q must be " + std::to_string(n) +
                            "x" + std::to_string(n) + ", got " + shape_str(q));
  }
  if (r.rows() != m) {
    throw PreconditionError("care_solve: R must be " + std::to_string(m) +
                            "x" + std::to_string(m) + ", got " + shape_str(r));
  }
  const double q_scale = std::max(1.0, q.norm());
  if ((q - q.adjoint()).norm() > 1e-9 * q_scale) {
    throw PreconditionError("care_solve: Q is not Hermitian");
  }
  const double r_scale = std::max(1.0, r.norm());
  if ((r - r.adjoint()).norm() > 1e-9 * r_scale) {
    throw PreconditionError("care_solve: R is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Mat> qs((q + q.adjoint()) / 2.0);
  if (qs.eigenvalues().minCoeff() < -1e-9 * q_scale) {
    throw PreconditionError("care_solve: Q is not positive semidefinite");
  }
  Eigen::SelfAdjointEigenSolver<Mat> rs((r + r.adjoint()) / 2.0);
  if (rs.eigenvalues().minCoeff() <= 1e-12 * r_scale) {
    throw PreconditionError("care_solve: R is not positive definite");
  }

  // PBH test: every eigenvalue of A in the closed right half plane must be
  // reachable through B.
  const double a_scale = std::max(1.0, a.norm());
  const Vec spec_a = eig(a).values;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (spec_a(i).real() >= -1e-10 * a_scale) {
      Mat pbh(n, n + m);
      pbh << spec_a(i) * Mat::Identity(n, n) - a, b;
      if (svd_rank(pbh).rank < n) {
        throw SynthesisError(
            "care_solve: (A, B) is not stabilizable; the eigenvalue " +
            cplx_str(spec_a(i)) + " is unreachable");
      }
    }
  }

  Mat rinv_bad = r.llt().solve(b.adjoint());  // inv(R) B*
  Mat ham(2 * n, 2 * n);
  ham << a, -b * rinv_bad, -q, -a.adjoint();

  Eigen::ComplexSchur<Mat> schur(ham, true);
  if (schur.info() != Eigen::Success) {
    throw NumericalError("care_solve: Schur decomposition of the Hamiltonian failed");
  }
  Mat t = schur.matrixT();
  Mat u = schur.matrixU();

  const double ham_scale = std::max(1.0, ham.norm());
  Eigen::Index n_stable = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (std::abs(t(i, i).real()) <= 1e-9 * ham_scale) {
      throw SynthesisError(
          "care_solve: Hamiltonian eigenvalue " + cplx_str(t(i, i)) +
          " lies on the imaginary axis; no stabilizing solution exists");
    }
    if (t(i, i).real() < 0) ++n_stable;
  }
  if (n_stable != n) {
    throw SynthesisError(
        "care_solve: stable Hamiltonian subspace has dimension " +
        std::to_string(n_stable) + ", expected " + std::to_string(n));
  }

  // Reorder so the n stable eigenvalues occupy the leading diagonal.
  for (Eigen::Index pos = 0; pos < n; ++pos) {
    Eigen::Index j = pos;
    while (j < 2 * n && t(j, j).real() >= 0) ++j;
    for (Eigen::Index k = j; k > pos; --k) {
      schur_swap(t, u, k - 1);
    }
  }

  Mat u11 = u.block(0, 0, n, n);
  Mat u21 = u.block(n, 0, n, n);
  Eigen::FullPivLU<Mat> lu(u11.transpose());
  if (!lu.isInvertible()) {
    throw NumericalError(
        "care_solve: singular basis block; stable subspace is not a graph");
  }
  Mat p = lu.solve(u21.transpose()).transpose();
  p = ((p + p.adjoint()) / 2.0).eval();

  Mat closed = a - b * rinv_bad * p;
  const Vec spec_cl = eig(closed).values;
  if (spec_cl.real().maxCoeff() >= 0) {
    throw NumericalError("care_solve: computed solution is not stabilizing");
  }
  Mat residual =
      a.adjoint() * p + p * a - p * b * r.llt().solve(b.adjoint() * p) + q;
  const double res_scale =
      std::max(1.0, q.norm() + 2.0 * a.norm() * p.norm() + (p * b).squaredNorm());
  if (residual.norm() > 1e-8 * res_scale) {
    throw NumericalError("care_solve: residual " +
                         std::to_string(residual.norm()) +
                         " exceeds the accuracy target");
  }
  Eigen::SelfAdjointEigenSolver<Mat> ps(p);
  if (ps.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, p.norm())) {
    throw NumericalError("care_solve: solution is not positive semidefinite");
  }
  return p;
}

}  // namespace regsyn
