#pragma once

#include "regsyn/numerics.hpp"
#include "regsyn/state_space.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace regsyn {
namespace detail {

// Orthonormal basis of the input directions a perturbation family excites at
// one exosystem frequency: span of Ptil(iw)^{-1} (Ctil R(iw, Atil) Etil
// + Ftil) e_k over the members. rank == 0 means the frequency is silent.
struct ExcitedSubspace {
  Eigen::Index rank = 0;
  Mat basis;
};

inline std::vector<ExcitedSubspace> excited_subspaces(
    const Exosystem& exo, const std::vector<PerturbedPlant>& family,
    Eigen::Index p, RankTolerance tol, const char* who) {
  if (family.empty()) {
    throw PreconditionError(std::string(who) +
                            " needs a nonempty perturbation family");
  }
  for (size_t i = 0; i < family.size(); ++i) {
    validate(family[i].plant);
    if (family[i].E.rows() != family[i].plant.n() ||
        family[i].E.cols() != exo.r() || family[i].F.rows() != p ||
        family[i].F.cols() != exo.r()) {
      throw PreconditionError(std::string(who) + ": family member " +
                              std::to_string(i) +
                              " has inconsistent E/F dimensions");
    }
  }
  const Eigen::Index q = static_cast<Eigen::Index>(exo.frequencies.size());
  std::vector<ExcitedSubspace> out(static_cast<size_t>(q));
  for (Eigen::Index k = 0; k < q; ++k) {
    const double w = exo.frequencies[static_cast<size_t>(k)];
    const Complex iw(0, w);
    Mat generators(p, static_cast<Eigen::Index>(family.size()));
    for (size_t i = 0; i < family.size(); ++i) {
      const PerturbedPlant& member = family[i];
      Mat ptil = transfer_eval(member.plant, iw);
      if (svd_rank(ptil).rank < p) {
        std::ostringstream os;
        os << who << ": family member " << i
           << " has a singular transfer function at w = " << w;
        throw SynthesisError(os.str());
      }
      const Eigen::Index n_i = member.plant.n();
      Vec forcing =
          member.plant.C *
              (iw * Mat::Identity(n_i, n_i) - member.plant.A)
                  .partialPivLu()
                  .solve(member.E.col(k)) +
          member.F.col(k);
      generators.col(static_cast<Eigen::Index>(i)) =
          ptil.partialPivLu().solve(forcing);
    }
    SvdRankResult span = svd_rank(generators, tol);
    out[static_cast<size_t>(k)].rank = span.rank;
    if (span.rank > 0) {
      out[static_cast<size_t>(k)].basis = span.range_basis;
    }
  }
  return out;
}

}  // namespace detail
}  // namespace regsyn
