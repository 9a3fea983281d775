#include "regsyn/stabilize.hpp"

#include "regsyn/numerics.hpp"

namespace regsyn {

Mat lqr_gain(const Mat& a, const Mat& b, const Mat* q, const Mat* r) {
  require_square(a, "lqr_gain: A");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (b.rows() != n) {
    throw PreconditionError("lqr_gain: B must have " + std::to_string(n) +
                            " rows, got " + shape_str(b));
  }
  Mat qq = q ? *q : Mat::Identity(n, n);
  Mat rr = r ? *r : Mat::Identity(m, m);
  Mat p = care_solve(a, b, qq, rr);
  Mat k = -rr.llt().solve(b.adjoint() * p);
  const double abscissa = eig(a + b * k).values.real().maxCoeff();
  if (abscissa >= 0) {
    throw SynthesisError("lqr_gain: closed loop failed to be Hurwitz");
  }
  return k;
}

Mat output_injection_gain(const Mat& a, const Mat& c, const Mat* q,
                          const Mat* r) {
  require_square(a, "output_injection_gain: A");
  if (c.cols() != a.rows()) {
    throw PreconditionError("output_injection_gain: C must have " +
                            std::to_string(a.rows()) + " columns, got " +
                            shape_str(c));
  }
  try {
    Mat k = lqr_gain(a.adjoint(), c.adjoint(), q, r);
    return k.adjoint();
  } catch (const SynthesisError& e) {
    throw SynthesisError(
        std::string("output_injection_gain: the pair is not detectable; "
                    "dual test reported: ") +
        e.what());
  }
}

}  // namespace regsyn
