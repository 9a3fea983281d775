#include "regsyn/heat2d.hpp"

#include "regsyn/minimal_controller.hpp"

#include <cmath>

namespace regsyn {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Closed form of the boundary integral of cos(m pi s) over [0, 1/2]:
// 1/2 for m = 0, sin(m pi / 2) / (m pi) otherwise, with the sine taken
// exactly from the residue of m mod 4.
double lower_segment_integral(int m) {
  if (m == 0) return 0.5;
  const int r = m % 4;
  const double s = (r == 1) ? 1.0 : (r == 3) ? -1.0 : 0.0;
  return s / (m * kPi);
}

// Integral of cos(m pi s) over [1/2, 1]; the two halves sum to zero for
// m >= 1 and to one for m = 0.
double upper_segment_integral(int m) {
  if (m == 0) return 0.5;
  return -lower_segment_integral(m);
}

double mode_scale(int m) { return m == 0 ? 1.0 : std::sqrt(2.0); }

}  // namespace

HeatPlant build_heat_plant(const HeatModelConfig& cfg) {
  if (cfg.modes_per_axis < 1) {
    throw PreconditionError("build_heat_plant: modes_per_axis must be >= 1");
  }
  if (cfg.kappa < 0) {
    throw PreconditionError("build_heat_plant: kappa must be >= 0");
  }
  const int nmodes = cfg.modes_per_axis;
  const Eigen::Index dim =
      static_cast<Eigen::Index>(nmodes) * static_cast<Eigen::Index>(nmodes);

  HeatPlant out;
  out.raw.A = Mat::Zero(dim, dim);
  out.raw.B = Mat::Zero(dim, 2);
  for (int m = 0; m < nmodes; ++m) {
    for (int n = 0; n < nmodes; ++n) {
      const Eigen::Index idx = static_cast<Eigen::Index>(m) * nmodes + n;
      out.raw.A(idx, idx) =
          Complex(-(static_cast<double>(m) * m + static_cast<double>(n) * n) *
                  kPi * kPi);
      const double scale = mode_scale(m) * mode_scale(n);
      const double sign_n = (n % 2 == 0) ? 1.0 : -1.0;
      out.raw.B(idx, 0) = Complex(scale * lower_segment_integral(m));
      out.raw.B(idx, 1) = Complex(scale * sign_n * upper_segment_integral(m));
    }
  }
  out.raw.C = 2.0 * out.raw.B.transpose();
  out.raw.D = Mat::Zero(2, 2);
  out.stabilized = prestabilize_output_feedback(out.raw, cfg.kappa);
  return out;
}

Exosystem benchmark_exosystem(Eigen::Index state_dim) {
  if (state_dim < 1) {
    throw PreconditionError("benchmark_exosystem: state_dim must be >= 1");
  }
  Mat f(2, 3);
  f << Complex(0.0), Complex(1.0), Complex(0.0),
      Complex(-0.5), Complex(0.0), Complex(-0.5);
  return exosystem_from_frequencies({-kPi, 0.0, kPi}, {1, 1, 1},
                                    Mat::Zero(state_dim, 3), f);
}

}  // namespace regsyn
