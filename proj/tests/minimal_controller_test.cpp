#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "regsyn/internal_model.hpp"
#include "regsyn/minimal_controller.hpp"
#include "regsyn/numerics.hpp"

#include "oracle_helpers.hpp"

#include <cmath>

using namespace regsyn;

namespace {

StateSpace scalar_plant(double d = 0.0) {
  StateSpace sys;
  sys.A = Mat::Constant(1, 1, -1.0);
  sys.B = Mat::Constant(1, 1, 1.0);
  sys.C = Mat::Constant(1, 1, 1.0);
  sys.D = Mat::Constant(1, 1, d);
  return sys;
}

Exosystem diag_exo(std::vector<double> freqs, Eigen::Index n, Eigen::Index p) {
  std::vector<int> ones(freqs.size(), 1);
  const auto r = static_cast<Eigen::Index>(freqs.size());
  return exosystem_from_frequencies(freqs, ones, Mat::Zero(n, r),
                                    Mat::Ones(p, r));
}

}  // namespace

TEST_CASE("scalar step regulator has a double pole at -1/2") {
  StateSpace sys = scalar_plant();
  Exosystem exo = diag_exo({0.0}, 1, 1);
  Controller ctrl = minimal_controller(sys, exo, 0.25);

  CHECK(ctrl.G1.rows() == 1);
  CHECK(std::abs(ctrl.G1(0, 0)) <= 1e-14);
  CHECK(std::abs(ctrl.G2(0, 0) - Complex(-1.0)) <= 1e-12);
  CHECK(std::abs(ctrl.K(0, 0) - Complex(0.25)) <= 1e-12);

  ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);
  EigResult eig_ae = eig(cl.Ae);
  Vec expected(2);
  expected << Complex(-0.5), Complex(-0.5);
  CHECK(testutil::multiset_distance(eig_ae.values, expected) <= 1e-9);

  RorpCertificate cert = certify_rorp(sys, ctrl, exo);
  CHECK(cert.hurwitz);
  CHECK(cert.g_conditions.pass);
  CHECK(cert.p_copy.pass);
  CHECK(cert.pass);
}

TEST_CASE("default gain blocks make every G2 block -I") {
  testutil::TestRng rng(401);
  StateSpace sys;
  sys.A = rng.hurwitz_matrix(5, 0.5);
  sys.B = rng.complex_matrix(5, 3);
  sys.C = rng.complex_matrix(2, 5);
  sys.D = Mat::Zero(2, 3);
  Exosystem exo = diag_exo({0.0, 0.7, -1.3}, 5, 2);

  Controller ctrl = minimal_controller(sys, exo, 1e-3);
  CHECK(ctrl.dim() == 6);
  for (int k = 0; k < 3; ++k) {
    Mat block = ctrl.G2.middleRows(2 * k, 2);
    CHECK((block + Mat::Identity(2, 2)).norm() <= 1e-12);
    Mat pk = transfer_eval(sys, Complex(0, exo.frequencies[k]));
    CHECK((ctrl.K.middleCols(2 * k, 2) - 1e-3 * pinv(pk)).norm() <= 1e-12);
  }
  RorpCertificate cert = certify_rorp(sys, ctrl, exo);
  CHECK(cert.pass);
}

TEST_CASE("custom K0 blocks reappear in K and G2") {
  StateSpace sys = scalar_plant();
  Exosystem exo = diag_exo({0.0}, 1, 1);
  std::vector<Mat> k0{Mat::Constant(1, 1, 3.0)};
  Controller ctrl = minimal_controller(sys, exo, 0.1, k0);
  CHECK(std::abs(ctrl.K(0, 0) - Complex(0.3)) <= 1e-12);
  CHECK(std::abs(ctrl.G2(0, 0) - Complex(-3.0)) <= 1e-12);
}

TEST_CASE("non-surjective transfer function is refused by frequency") {
  StateSpace sys = scalar_plant(-1.0);  // P(0) = 1 - 1 = 0
  Exosystem exo = diag_exo({0.0}, 1, 1);
  CHECK_THROWS_WITH_AS(minimal_controller(sys, exo, 0.1),
                       doctest::Contains("not surjective"), SynthesisError);

  StateSpace tall;  // two outputs, one input: rank P <= 1 < p
  tall.A = Mat::Constant(1, 1, -1.0);
  tall.B = Mat::Constant(1, 1, 1.0);
  tall.C = Mat::Ones(2, 1);
  tall.D = Mat::Zero(2, 1);
  Exosystem exo2 = diag_exo({0.5}, 1, 2);
  CHECK_THROWS_AS(minimal_controller(tall, exo2, 0.1), SynthesisError);
}

TEST_CASE("precondition violations are reported before synthesis") {
  StateSpace unstable = scalar_plant();
  unstable.A(0, 0) = Complex(0.2);
  Exosystem exo = diag_exo({0.0}, 1, 1);
  CHECK_THROWS_WITH_AS(minimal_controller(unstable, exo, 0.1),
                       doctest::Contains("exponentially stable"),
                       PreconditionError);

  Exosystem jordan = exosystem_from_frequencies({1.0}, {2}, Mat::Zero(1, 2),
                                                 Mat::Ones(1, 2));
  CHECK_THROWS_WITH_AS(minimal_controller(scalar_plant(), jordan, 0.1),
                       doctest::Contains("diagonal"), PreconditionError);

  CHECK_THROWS_AS(minimal_controller(scalar_plant(), exo, 0.0),
                  PreconditionError);
}

TEST_CASE("tune_epsilon finds the stability boundary of a resonant loop") {
  // det(sI - Ae) = s^3 + 0.4 s^2 + 4 s + 4 eps, Hurwitz iff 0 < eps < 0.4.
  StateSpace sys;
  sys.A = Mat::Zero(2, 2);
  sys.A << Complex(0.0), Complex(1.0), Complex(-4.0), Complex(-0.4);
  sys.B = Mat::Zero(2, 1);
  sys.B(1, 0) = Complex(1.0);
  sys.C = Mat::Zero(1, 2);
  sys.C(0, 0) = Complex(1.0);
  sys.D = Mat::Zero(1, 1);
  Exosystem exo = diag_exo({0.0}, 2, 1);

  double eps = tune_epsilon(sys, exo, 1.0, 30);
  CHECK(eps > 0.37);
  CHECK(eps < 0.4 + 1e-9);

  auto abscissa_at = [&](double e) {
    Controller ctrl = minimal_controller(sys, exo, e);
    return spectral_abscissa(assemble_closed_loop(sys, ctrl, exo).Ae);
  };
  CHECK(abscissa_at(eps) < 0);
  CHECK(abscissa_at(eps / 2) < 0);
  CHECK_THROWS_AS(minimal_controller(sys, exo, 2 * eps), SynthesisError);
}

TEST_CASE("tune_epsilon returns epsilon_max when the whole grid is stable") {
  StateSpace sys = scalar_plant();
  Exosystem exo = diag_exo({0.0}, 1, 1);
  CHECK(tune_epsilon(sys, exo, 1.0) == 1.0);
}

TEST_CASE("output feedback prestabilization") {
  SUBCASE("with D = 0 it reduces to A - kappa B C") {
    testutil::TestRng rng(402);
    StateSpace sys;
    sys.A = rng.complex_matrix(4, 4);
    sys.B = rng.complex_matrix(4, 2);
    sys.C = rng.complex_matrix(2, 4);
    sys.D = Mat::Zero(2, 2);
    StateSpace out = prestabilize_output_feedback(sys, 1.5);
    CHECK((out.A - (sys.A - 1.5 * sys.B * sys.C)).norm() <= 1e-13);
    CHECK((out.B - sys.B).norm() == 0.0);
    CHECK((out.C - sys.C).norm() <= 1e-13);
    CHECK(out.D.norm() == 0.0);
  }
  SUBCASE("with D != 0 the loop transfer identity holds") {
    testutil::TestRng rng(403);
    StateSpace sys;
    sys.A = rng.complex_matrix(3, 3);
    sys.B = rng.complex_matrix(3, 2);
    sys.C = rng.complex_matrix(2, 3);
    sys.D = rng.complex_matrix(2, 2);
    const double kappa = 0.7;
    StateSpace out = prestabilize_output_feedback(sys, kappa);
    const Complex s(1.0, 0.5);
    Mat p_open = transfer_eval(sys, s);
    Mat p_closed = transfer_eval(out, s);
    Mat oracle = p_open * (Mat::Identity(2, 2) + kappa * p_open)
                              .partialPivLu()
                              .inverse();
    CHECK((p_closed - oracle).norm() <= 1e-10 * oracle.norm());
  }
  SUBCASE("non-square plants are refused") {
    StateSpace sys;
    sys.A = Mat::Identity(2, 2);
    sys.B = Mat::Ones(2, 1);
    sys.C = Mat::Ones(2, 2);
    sys.D = Mat::Zero(2, 1);
    CHECK_THROWS_AS(prestabilize_output_feedback(sys, 1.0),
                    PreconditionError);
  }
}

TEST_CASE("real form regulator on a scalar plant") {
  StateSpace sys = scalar_plant();
  Exosystem exo = diag_exo({1.0, -1.0, 0.0}, 1, 1);
  Controller ctrl = minimal_controller_real(sys, exo, 0.25);

  CHECK(ctrl.dim() == 3);
  CHECK(ctrl.G1.imag().norm() == 0.0);
  CHECK(ctrl.G2.imag().norm() == 0.0);
  CHECK(ctrl.K.imag().norm() == 0.0);

  Mat g1_expected = Mat::Zero(3, 3);
  g1_expected(0, 1) = Complex(1.0);
  g1_expected(1, 0) = Complex(-1.0);
  CHECK((ctrl.G1 - g1_expected).norm() <= 1e-14);

  Mat g2_expected = Mat::Zero(3, 1);
  g2_expected(0, 0) = Complex(-1.0);
  g2_expected(2, 0) = Complex(-1.0);
  CHECK((ctrl.G2 - g2_expected).norm() <= 1e-14);

  // P(i) = (1 - i)/2, so 1/P(i) = 1 + i and the paired gain is (1, 1).
  Mat k_expected = Mat::Zero(1, 3);
  k_expected << Complex(0.25), Complex(0.25), Complex(0.25);
  CHECK((ctrl.K - k_expected).norm() <= 1e-12);

  // Q* G1 Q recovers the diagonal complex form.
  const double s = 1.0 / std::sqrt(2.0);
  Mat q = Mat::Zero(3, 3);
  q(0, 0) = Complex(s);
  q(0, 1) = Complex(s);
  q(1, 0) = Complex(0, s);
  q(1, 1) = Complex(0, -s);
  q(2, 2) = Complex(1.0);
  Mat diag_form = q.adjoint() * ctrl.G1 * q;
  Mat diag_expected = Mat::Zero(3, 3);
  diag_expected(0, 0) = Complex(0, 1);
  diag_expected(1, 1) = Complex(0, -1);
  CHECK((diag_form - diag_expected).norm() <= 1e-12);

  RorpCertificate cert = certify_rorp(sys, ctrl, exo);
  CHECK(cert.pass);
}

TEST_CASE("real form regulator on a random real two-output plant") {
  testutil::TestRng rng(404);
  StateSpace sys;
  sys.A = rng.hurwitz_matrix(6, 0.5, false);
  sys.B = rng.real_matrix(6, 2);
  sys.C = rng.real_matrix(2, 6);
  sys.D = Mat::Zero(2, 2);
  Exosystem exo = diag_exo({0.9, -0.9}, 6, 2);

  Controller ctrl = minimal_controller_real(sys, exo, 1e-3);
  CHECK(ctrl.dim() == 4);
  CHECK(ctrl.G1.imag().norm() == 0.0);
  CHECK(ctrl.K.imag().norm() == 0.0);
  RorpCertificate cert = certify_rorp(sys, ctrl, exo);
  CHECK(cert.pass);
}

TEST_CASE("real form refuses unpaired frequencies") {
  StateSpace sys = scalar_plant();
  Exosystem exo = diag_exo({1.0, 0.0}, 1, 1);
  CHECK_THROWS_WITH_AS(minimal_controller_real(sys, exo, 0.1),
                       doctest::Contains("partner"), PreconditionError);

  StateSpace complex_plant = scalar_plant();
  complex_plant.A(0, 0) = Complex(-1.0, 0.3);
  Exosystem paired = diag_exo({1.0, -1.0}, 1, 1);
  CHECK_THROWS_WITH_AS(minimal_controller_real(complex_plant, paired, 0.1),
                       doctest::Contains("real plant"), PreconditionError);
}

TEST_CASE("reduced internal model keeps only excited directions") {
  testutil::TestRng rng(405);
  StateSpace sys;
  sys.A = rng.hurwitz_matrix(3, 0.6, false);
  sys.B = rng.real_matrix(3, 2);
  sys.C = rng.real_matrix(2, 3);
  sys.D = Mat::Zero(2, 2);
  Exosystem exo = diag_exo({1.0, 2.0}, 3, 2);

  auto member = [&](const Mat& f) {
    PerturbedPlant out;
    out.plant = sys;
    out.E = Mat::Zero(3, 2);
    out.F = f;
    return out;
  };
  // First columns parallel, second columns independent.
  Mat f1(2, 2), f2(2, 2);
  f1 << Complex(1.0), Complex(1.0), Complex(1.0), Complex(0.0);
  f2 << Complex(2.0), Complex(0.0), Complex(2.0), Complex(1.0);
  std::vector<PerturbedPlant> family{member(f1), member(f2)};

  ReducedOrderInfo info;
  Controller ctrl =
      reduced_order_minimal_controller(sys, exo, family, 0.02, &info);
  CHECK(info.full_dim == 4);
  CHECK(info.reduced_dim == 3);
  CHECK(info.subspace_dims == std::vector<int>{1, 2});
  CHECK(info.retained_frequencies == std::vector<double>{1.0, 2.0});
  CHECK(ctrl.dim() == 3);

  // The single retained direction at w = 1 spans P(i)^{-1} F e_1.
  Mat p1 = transfer_eval(sys, Complex(0, 1));
  Vec dir = p1.partialPivLu().solve(Vec(f1.col(0)));
  dir.normalize();
  Vec basis = ctrl.K.col(0) / ctrl.K.col(0).norm();
  CHECK(std::abs(std::abs(basis.dot(dir)) - 1.0) <= 1e-10);

  ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);
  CHECK(spectral_abscissa(cl.Ae) < 0);
}

TEST_CASE("reduced internal model drops unexcited frequencies") {
  testutil::TestRng rng(406);
  StateSpace sys;
  sys.A = rng.hurwitz_matrix(3, 0.6, false);
  sys.B = rng.real_matrix(3, 2);
  sys.C = rng.real_matrix(2, 3);
  sys.D = Mat::Zero(2, 2);
  Exosystem exo = diag_exo({1.0, 2.0}, 3, 2);

  PerturbedPlant member;
  member.plant = sys;
  member.E = Mat::Zero(3, 2);
  member.F = Mat::Zero(2, 2);
  member.F(0, 0) = Complex(1.0);
  std::vector<PerturbedPlant> family{member};

  ReducedOrderInfo info;
  Controller ctrl =
      reduced_order_minimal_controller(sys, exo, family, 0.02, &info);
  CHECK(info.retained_frequencies == std::vector<double>{1.0});
  CHECK(info.reduced_dim == 1);
  CHECK(ctrl.dim() == 1);

  member.F.setZero();
  std::vector<PerturbedPlant> silent{member};
  CHECK_THROWS_WITH_AS(
      reduced_order_minimal_controller(sys, exo, silent, 0.02),
      doctest::Contains("excites none"), SynthesisError);
}
