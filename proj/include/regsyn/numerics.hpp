#pragma once

#include "regsyn/types.hpp"

namespace regsyn {

struct EigResult {
  Vec values;   // eigenvalues, in solver order
  Mat vectors;  // unit-norm eigenvectors as columns, same order
};

// Dense eigendecomposition of a square complex matrix.
EigResult eig(const Mat& m);

struct SvdRankResult {
  int rank = 0;
  RealVec singular_values;  // descending
  Mat range_basis;          // orthonormal columns spanning ran(M)
  Mat null_basis;           // orthonormal columns spanning ker(M)
};

// Numerical rank plus orthonormal range/null bases via SVD.
SvdRankResult svd_rank(const Mat& m, RankTolerance tol = {});

// Moore-Penrose pseudoinverse via SVD with relative rank cutoff.
Mat pinv(const Mat& m, RankTolerance tol = {});

// Matrix exponential (scaling-and-squaring with Pade approximants).
Mat expm(const Mat& m);

// Solves the Sylvester equation X*B - A*X = C for X (rows(A) x cols(B)).
// Requires spectra of A and B to be disjoint.
Mat sylvester_generic(const Mat& a, const Mat& b, const Mat& c);

// Stabilizing solution P of A'P + PA - PB inv(R) B'P + Q = 0, computed from
// the stable invariant subspace of the Hamiltonian matrix (ordered Schur).
// P is Hermitian PSD and A - B inv(R) B' P is Hurwitz.
Mat care_solve(const Mat& a, const Mat& b, const Mat& q, const Mat& r);

}  // namespace regsyn
