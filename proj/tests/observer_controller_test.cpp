#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "regsyn/internal_model.hpp"
#include "regsyn/numerics.hpp"
#include "regsyn/observer_controller.hpp"

#include "oracle_helpers.hpp"

#include <cmath>

using namespace regsyn;

namespace {

StateSpace scalar_plant() {
  StateSpace sys;
  sys.A = Mat::Constant(1, 1, -1.0);
  sys.B = Mat::Constant(1, 1, 1.0);
  sys.C = Mat::Constant(1, 1, 1.0);
  sys.D = Mat::Zero(1, 1);
  return sys;
}

Exosystem make_exo(std::vector<double> freqs, std::vector<int> sizes,
                   Eigen::Index n, Eigen::Index p) {
  Eigen::Index r = 0;
  for (int nk : sizes) r += nk;
  return exosystem_from_frequencies(freqs, sizes, Mat::Zero(n, r),
                                    Mat::Ones(p, r));
}

StateSpace random_square_plant(testutil::TestRng& rng, Eigen::Index n,
                               Eigen::Index p, bool stable) {
  StateSpace sys;
  sys.A = stable ? rng.hurwitz_matrix(n, 0.5, false) : rng.real_matrix(n, n);
  sys.B = rng.real_matrix(n, p);
  sys.C = rng.real_matrix(p, n);
  sys.D = Mat::Zero(p, p);
  return sys;
}

}  // namespace

TEST_CASE("coupling matrix with a single Jordan cell is one resolvent term") {
  testutil::TestRng rng(601);
  Mat a = rng.hurwitz_matrix(3, 0.5);
  Mat c = rng.complex_matrix(2, 3);
  Mat g2 = rng.complex_matrix(2, 2);
  Mat h = observer_coupling_matrix(a, c, g2, {0.8}, {1});
  const Complex iw(0, 0.8);
  Mat rhs = g2 * c;
  Mat oracle = Mat((iw * Mat::Identity(3, 3) - a).transpose())
                   .partialPivLu()
                   .solve(rhs.transpose())
                   .transpose();
  CHECK((h - oracle).norm() <= 1e-12 * std::max(1.0, oracle.norm()));
}

TEST_CASE("coupling matrix two cell chain by hand") {
  Mat a = Mat::Constant(1, 1, -1.0);
  Mat c = Mat::Constant(1, 1, 1.0);
  Mat g2(2, 1);
  g2 << Complex(0.0), Complex(1.0);
  Mat h = observer_coupling_matrix(a, c, g2, {0.0}, {2});
  CHECK(std::abs(h(0, 0) - Complex(-1.0)) <= 1e-14);
  CHECK(std::abs(h(1, 0) - Complex(1.0)) <= 1e-14);

  Mat g1 = build_jordan_internal_model({0.0}, {2}, 1);
  CHECK((g1 * h - h * a - g2 * c).norm() <= 1e-14);
}

TEST_CASE("coupling matrix agrees with the generic Sylvester solver") {
  testutil::TestRng rng(602);
  Mat a = rng.hurwitz_matrix(3, 0.5);
  Mat c = rng.complex_matrix(1, 3);
  std::vector<double> freqs{0.0, 1.1};
  std::vector<int> sizes{2, 1};
  Mat g2 = rng.complex_matrix(3, 1);  // p = 1, chains (2, 1)
  Mat h = observer_coupling_matrix(a, c, g2, freqs, sizes);

  Mat g1 = build_jordan_internal_model(freqs, sizes, 1);
  Mat generic = sylvester_generic(g1, a, Mat(-g2 * c));
  CHECK((h - generic).norm() <= 1e-9 * std::max(1.0, generic.norm()));

  Mat residual = g1 * h - h * a - g2 * c;
  CHECK(residual.norm() <= 1e-10 * std::max(1.0, h.norm()));
}

TEST_CASE("coupling matrix refuses spectra touching i w") {
  Mat a = Mat::Constant(1, 1, Complex(0.0, 1.0));
  Mat c = Mat::Ones(1, 1);
  Mat g2 = Mat::Ones(1, 1);
  CHECK_THROWS_WITH_AS(observer_coupling_matrix(a, c, g2, {1.0}, {1}),
                       doctest::Contains("spectrum"), NumericalError);
}

TEST_CASE("scalar plant synthesis with automatic gains") {
  StateSpace sys = scalar_plant();
  Exosystem exo = make_exo({0.0}, {1}, 1, 1);
  ObserverRecord rec;
  Controller ctrl = observer_controller(sys, exo, std::nullopt, std::nullopt,
                                        std::nullopt, &rec);
  CHECK(ctrl.family == "observer");
  CHECK(ctrl.dim() == 2);

  const double s2 = std::sqrt(2.0);
  CHECK(std::abs(rec.K21(0, 0) - Complex(1.0 - s2)) <= 1e-10);
  CHECK(std::abs(rec.L(0, 0) - Complex(1.0 - s2)) <= 1e-10);
  CHECK(std::abs(rec.G2(0, 0) - Complex(1.0)) <= 1e-14);
  CHECK(std::abs(rec.H(0, 0) - Complex(1.0 / s2)) <= 1e-10);
  CHECK(std::abs(rec.B1(0, 0) - Complex(1.0 / s2)) <= 1e-10);
  CHECK(std::abs(rec.K1(0, 0) - Complex(-1.0)) <= 1e-10);
  CHECK(std::abs(rec.K2(0, 0) - Complex(1.0 - s2 - 1.0 / s2)) <= 1e-10);

  ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);
  Vec expected(3);
  expected << Complex(-s2), Complex(-1.0 / s2), Complex(-s2);
  CHECK(testutil::multiset_distance(eig(cl.Ae).values, expected) <= 1e-7);

  RorpCertificate cert = certify_rorp(sys, ctrl, exo);
  CHECK(cert.pass);
}

TEST_CASE("block structure and triangularization of the closed loop") {
  testutil::TestRng rng(603);
  StateSpace sys = random_square_plant(rng, 4, 2, false);
  Exosystem exo = make_exo({0.0, 1.5}, {1, 2}, 4, 2);

  ObserverRecord rec;
  Controller ctrl = observer_controller(sys, exo, std::nullopt, std::nullopt,
                                        std::nullopt, &rec);
  const Eigen::Index n = 4;
  const Eigen::Index nc = rec.G1.rows();
  CHECK(nc == 6);
  CHECK(ctrl.G1.topRightCorner(nc, n).norm() == 0.0);
  CHECK((ctrl.G2.topRows(nc) - rec.G2).norm() == 0.0);
  CHECK((ctrl.G2.bottomRows(n) + rec.L).norm() == 0.0);
  CHECK((rec.K2 - (rec.K21 + rec.K1 * rec.H)).norm() == 0.0);
  CHECK((rec.B1 - (rec.H * sys.B + rec.G2 * sys.D)).norm() == 0.0);

  Mat a_k = sys.A + sys.B * rec.K21;
  Mat c_k = sys.C + sys.D * rec.K21;
  CHECK((rec.G1 * rec.H - rec.H * a_k - rec.G2 * c_k).norm() <=
        1e-10 * std::max(1.0, rec.H.norm()));

  ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);
  Mat qe = Mat::Zero(2 * n + nc, 2 * n + nc);
  qe.block(0, 0, n, n) = -Mat::Identity(n, n);
  qe.block(n, 0, nc, n) = rec.H;
  qe.block(n, n, nc, nc) = Mat::Identity(nc, nc);
  qe.block(n + nc, 0, n, n) = -Mat::Identity(n, n);
  qe.block(n + nc, n + nc, n, n) = Mat::Identity(n, n);
  CHECK((qe * qe - Mat::Identity(2 * n + nc, 2 * n + nc)).norm() <= 1e-14);

  Mat ahat = qe * cl.Ae * qe;
  const double scale = cl.Ae.norm();
  CHECK(ahat.block(n, 0, nc, n).norm() <= 1e-9 * scale);
  CHECK(ahat.block(n + nc, 0, n, n).norm() <= 1e-9 * scale);
  CHECK(ahat.block(n + nc, n, n, nc).norm() <= 1e-9 * scale);

  Mat block1 = sys.A + sys.B * rec.K21;
  Mat block2 = rec.G1 + rec.B1 * rec.K1;
  Mat block3 = sys.A + rec.L * sys.C;
  CHECK((ahat.block(0, 0, n, n) - block1).norm() <= 1e-9 * scale);
  CHECK((ahat.block(n, n, nc, nc) - block2).norm() <= 1e-9 * scale);
  CHECK((ahat.block(n + nc, n + nc, n, n) - block3).norm() <= 1e-9 * scale);

  Vec all_blocks(2 * n + nc);
  all_blocks << eig(block1).values, eig(block2).values, eig(block3).values;
  CHECK(testutil::multiset_distance(eig(cl.Ae).values, all_blocks) <= 1e-7);

  // The internal model pair splits the space: ran(iw - G1) + ran(G2) is
  // everything and the intersection is trivial.
  InternalModelSpec spec = internal_model_spec(exo, 2);
  GConditionsReport g_report = check_g_conditions(rec.G1, rec.G2, spec);
  CHECK(g_report.pass);
  for (size_t k = 0; k < exo.frequencies.size(); ++k) {
    const Complex iw(0, exo.frequencies[k]);
    Mat shifted = iw * Mat::Identity(nc, nc) - rec.G1;
    Mat concat(nc, nc + 2);
    concat << shifted, rec.G2;
    CHECK(svd_rank(concat).rank == nc);
  }

  RorpCertificate cert = certify_rorp(sys, ctrl, exo);
  CHECK(cert.pass);
}

TEST_CASE("non-square plants are rejected with a shape error") {
  StateSpace sys;
  sys.A = Mat::Constant(1, 1, -1.0);
  sys.B = Mat::Ones(1, 1);
  sys.C = Mat::Ones(2, 1);
  sys.D = Mat::Zero(2, 1);
  Exosystem exo = make_exo({0.0}, {1}, 1, 2);
  CHECK_THROWS_WITH_AS(observer_controller(sys, exo),
                       doctest::Contains("inputs"), PreconditionError);
  CHECK_THROWS_AS(observer_controller_diag(sys, exo), PreconditionError);
}

TEST_CASE("singular transfer function at a signal frequency is refused") {
  StateSpace sys = scalar_plant();
  sys.D = Mat::Constant(1, 1, -1.0);  // P(0) = 1 - 1 = 0
  Exosystem exo = make_exo({0.0}, {1}, 1, 1);
  CHECK_THROWS_WITH_AS(observer_controller(sys, exo),
                       doctest::Contains("not invertible"), SynthesisError);
}

TEST_CASE("diagonal variant gives K1 = -I blocks in closed form") {
  SUBCASE("scalar integrator frequency") {
    StateSpace sys = scalar_plant();
    Exosystem exo = make_exo({0.0}, {1}, 1, 1);
    ObserverRecord rec;
    Controller ctrl = observer_controller_diag(sys, exo, std::nullopt,
                                               std::nullopt, std::nullopt,
                                               &rec);
    CHECK(ctrl.family == "observer-diag");
    CHECK(std::abs(rec.K1(0, 0) - Complex(-1.0)) <= 1e-12);
    CHECK(std::abs(rec.B1(0, 0) - Complex(1.0)) <= 1e-12);
    CHECK(certify_rorp(sys, ctrl, exo).pass);
  }
  SUBCASE("random stable square plant") {
    testutil::TestRng rng(604);
    StateSpace sys = random_square_plant(rng, 3, 2, true);
    Exosystem exo = make_exo({0.0, 1.1}, {1, 1}, 3, 2);
    ObserverRecord rec;
    Controller ctrl = observer_controller_diag(sys, exo, std::nullopt,
                                               std::nullopt, std::nullopt,
                                               &rec);
    for (int k = 0; k < 2; ++k) {
      CHECK((rec.K1.middleCols(2 * k, 2) + Mat::Identity(2, 2)).norm() <=
            1e-12);
      CHECK((rec.B1.middleRows(2 * k, 2) - Mat::Identity(2, 2)).norm() <=
            1e-12);
    }
    InternalModelSpec spec = internal_model_spec(exo, 2);
    AdjointFeedbackReport rep =
        check_adjoint_feedback_stability(rec.G1, rec.B1, spec);
    CHECK(rep.stable);
    CHECK(certify_rorp(sys, ctrl, exo).pass);
  }
  SUBCASE("custom identity G2 pins K1 to -P_K(0)*") {
    StateSpace sys = scalar_plant();
    Exosystem exo = make_exo({0.0}, {1}, 1, 1);
    std::vector<Mat> g2{Mat::Identity(1, 1)};
    ObserverRecord rec;
    observer_controller_diag(sys, exo, std::nullopt, std::nullopt, g2, &rec);
    CHECK(std::abs(rec.K1(0, 0) - Complex(-1.0 / std::sqrt(2.0))) <= 1e-10);
  }
}

TEST_CASE("stabilized transfer identity used for the G2 choice") {
  // P_K(s) = P(s) (I - K21 R(s, A) B)^{-1} for the state-fed plant.
  testutil::TestRng rng(605);
  StateSpace sys;
  sys.A = rng.complex_matrix(3, 3);
  sys.B = rng.complex_matrix(3, 2);
  sys.C = rng.complex_matrix(2, 3);
  sys.D = rng.complex_matrix(2, 2);
  Mat k21 = rng.complex_matrix(2, 3);
  StateSpace fed;
  fed.A = sys.A + sys.B * k21;
  fed.B = sys.B;
  fed.C = sys.C + sys.D * k21;
  fed.D = sys.D;
  const Complex s(0.3, -1.2);
  Mat p_k = transfer_eval(fed, s);
  Mat p = transfer_eval(sys, s);
  Mat inner = Mat::Identity(2, 2) -
              k21 * (s * Mat::Identity(3, 3) - sys.A)
                        .partialPivLu()
                        .solve(sys.B);
  Mat oracle = p * inner.partialPivLu().inverse();
  CHECK((p_k - oracle).norm() <= 1e-10 * std::max(1.0, oracle.norm()));
}

TEST_CASE("ramp chain with default G2 passes the full certificate") {
  StateSpace sys = scalar_plant();
  Exosystem exo = make_exo({0.0}, {2}, 1, 1);
  ObserverRecord rec;
  Controller ctrl = observer_controller(sys, exo, std::nullopt, std::nullopt,
                                        std::nullopt, &rec);
  Mat g2_expected(2, 1);
  g2_expected << Complex(0.0), Complex(1.0);
  CHECK((rec.G2 - g2_expected).norm() == 0.0);

  RorpCertificate cert = certify_rorp(sys, ctrl, exo);
  CHECK(cert.pass);
  CHECK(cert.p_copy.long_chain_counts[0] == 1);
}
