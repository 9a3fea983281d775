#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracle_helpers.hpp"
#include "regsyn/numerics.hpp"
#include "regsyn/state_space.hpp"

using namespace regsyn;

namespace {

StateSpace scalar_plant() {
  StateSpace sys;
  sys.A = -Mat::Identity(1, 1);
  sys.B = Mat::Identity(1, 1);
  sys.C = Mat::Identity(1, 1);
  sys.D = Mat::Zero(1, 1);
  return sys;
}

}  // namespace

TEST_CASE("exosystem_from_frequencies builds Jordan blocks") {
  Exosystem exo = exosystem_from_frequencies(
      {M_PI}, {2}, Mat::Zero(1, 2), Mat::Zero(1, 2));
  REQUIRE(exo.r() == 2);
  CHECK(exo.S(0, 0) == Complex(0, M_PI));
  CHECK(exo.S(0, 1) == Complex(1, 0));
  CHECK(exo.S(1, 0) == Complex(0, 0));
  CHECK(exo.S(1, 1) == Complex(0, M_PI));
}

TEST_CASE("exosystem validation rejects bad data") {
  Exosystem exo;
  exo.frequencies = {0.0};
  exo.jordan_sizes = {1};
  exo.S = Mat::Identity(1, 1);  // eigenvalue 1, off the imaginary axis
  exo.E = Mat::Zero(1, 1);
  exo.F = Mat::Zero(1, 1);
  CHECK_THROWS_AS(validate(exo), PreconditionError);

  CHECK_THROWS_AS(exosystem_from_frequencies({1.0, 1.0}, {1, 1},
                                             Mat::Zero(1, 2), Mat::Zero(1, 2)),
                  PreconditionError);

  // Two blocks at the same eigenvalue: geometric multiplicity two.
  Exosystem gm2;
  gm2.frequencies = {2.0};
  gm2.jordan_sizes = {2};
  gm2.S = Complex(0, 2) * Mat::Identity(2, 2);
  gm2.E = Mat::Zero(1, 2);
  gm2.F = Mat::Zero(1, 2);
  CHECK_THROWS_AS(validate(gm2), PreconditionError);
}

TEST_CASE("transfer_eval on the scalar plant") {
  StateSpace sys = scalar_plant();
  CHECK(std::abs(transfer_eval(sys, Complex(0, 0))(0, 0) - Complex(1, 0)) <=
        1e-14);
  // P(i) = 1/(1+i) = (1-i)/2
  CHECK(std::abs(transfer_eval(sys, Complex(0, 1))(0, 0) -
                 Complex(0.5, -0.5)) <= 1e-14);
  CHECK_THROWS_AS(transfer_eval(sys, Complex(-1, 0)), NumericalError);
}

TEST_CASE("transfer_eval matches an adjugate oracle on a 2x2 plant") {
  StateSpace sys;
  sys.A = Mat(2, 2);
  sys.A << Complex(-1, 0), Complex(2, 0), Complex(0, 0), Complex(-3, 0);
  sys.B = Mat(2, 1);
  sys.B << Complex(1, 0), Complex(1, 0);
  sys.C = Mat(1, 2);
  sys.C << Complex(1, 0), Complex(0, 0);
  sys.D = Mat::Zero(1, 1);
  Complex lambda(0, 1);
  // (lambda-A)^{-1} via the 2x2 adjugate formula.
  Complex det = (lambda + 1.0) * (lambda + 3.0);
  Complex p_oracle = ((lambda + 3.0) * 1.0 + 2.0 * 1.0) / det;
  CHECK(std::abs(transfer_eval(sys, lambda)(0, 0) - p_oracle) <= 1e-13);
}

TEST_CASE("assemble_closed_loop reproduces the hand-built scalar loop") {
  StateSpace sys = scalar_plant();
  Exosystem exo = exosystem_from_frequencies({0.0}, {1}, Mat::Zero(1, 1),
                                             -Mat::Identity(1, 1));
  Controller ctrl;
  ctrl.G1 = Mat::Zero(1, 1);
  ctrl.G2 = -Mat::Identity(1, 1);
  ctrl.K = 0.25 * Mat::Identity(1, 1);
  ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);

  Mat expected(2, 2);
  expected << Complex(-1, 0), Complex(0.25, 0), Complex(-1, 0), Complex(0, 0);
  CHECK((cl.Ae - expected).norm() <= 1e-15);
  CHECK(cl.Be.rows() == 2);
  CHECK(cl.Ce.cols() == 2);
  CHECK((cl.De + Mat::Identity(1, 1)).norm() <= 1e-15);

  // Characteristic polynomial s^2 + s + 1/4 has the double root -1/2.
  CHECK(std::abs(spectral_abscissa(cl.Ae) + 0.5) <= 1e-9);
}

TEST_CASE("assemble_closed_loop checks dimensions") {
  StateSpace sys = scalar_plant();
  Exosystem exo = exosystem_from_frequencies({0.0}, {1}, Mat::Zero(2, 1),
                                             -Mat::Identity(1, 1));
  Controller ctrl;
  ctrl.G1 = Mat::Zero(1, 1);
  ctrl.G2 = -Mat::Identity(1, 1);
  ctrl.K = Mat::Identity(1, 1);
  CHECK_THROWS_AS(assemble_closed_loop(sys, ctrl, exo), PreconditionError);
}

TEST_CASE("spectral_abscissa picks the rightmost eigenvalue") {
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = Complex(-4, 1);
  m(1, 1) = Complex(-0.25, -7);
  m(2, 2) = Complex(-9, 0);
  CHECK(std::abs(spectral_abscissa(m) + 0.25) <= 1e-12);
}

TEST_CASE("is_real_system flags exact realness") {
  StateSpace sys = scalar_plant();
  CHECK(is_real_system(sys));
  sys.B(0, 0) = Complex(1, 1e-18);
  CHECK(!is_real_system(sys));
}
