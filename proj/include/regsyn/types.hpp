#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace regsyn {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealMat = Eigen::MatrixXd;
using RealVec = Eigen::VectorXd;

// Input shapes or values violate an operation's contract.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to reach its accuracy target or hit a
// singular/ill-posed instance.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A synthesis step produced no valid controller (non-Hurwitz closed loop,
// unstabilizable data, empty gain search).
struct SynthesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Relative cutoff for numerical rank decisions: singular values at or below
// rel * sigma_max are treated as zero.
struct RankTolerance {
  double rel = 1e-9;
};

inline bool all_finite(const Mat& m) {
  return m.array().isFinite().all();
}

inline void require_finite(const Mat& m, const std::string& name) {
  if (!all_finite(m)) {
    throw PreconditionError(name + " contains a non-finite entry");
  }
}

inline void require_square(const Mat& m, const std::string& name) {
  if (m.rows() != m.cols()) {
    throw PreconditionError(name + " must be square, got " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
}

// True when every entry has exactly zero imaginary part.
inline bool is_real_matrix(const Mat& m) {
  return (m.imag().array() == 0.0).all();
}

inline std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace regsyn
