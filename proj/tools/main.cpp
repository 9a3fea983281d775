#include "regsyn/heat2d.hpp"
#include "regsyn/minimal_controller.hpp"
#include "regsyn/observer_controller.hpp"
#include "regsyn/serialize.hpp"
#include "regsyn/simulate.hpp"
#include "regsyn/triangular_controller.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

using namespace regsyn;
using nlohmann::json;

namespace {

struct PlantOptions {
  std::string source = "heat";
  int modes = 10;
  double kappa = 1.0;
};

void add_plant_flags(CLI::App* cmd, PlantOptions& opt) {
  cmd->add_option("--plant", opt.source,
                  "plant json file, or `heat` for the built-in benchmark")
      ->capture_default_str();
  cmd->add_option("--modes", opt.modes, "modes per axis of the heat benchmark")
      ->capture_default_str();
  cmd->add_option("--kappa", opt.kappa,
                  "output feedback gain folded into the heat benchmark")
      ->capture_default_str();
}

StateSpace load_plant(const PlantOptions& opt) {
  if (opt.source == "heat") {
    HeatModelConfig cfg;
    cfg.modes_per_axis = opt.modes;
    cfg.kappa = opt.kappa;
    return build_heat_plant(cfg).stabilized;
  }
  return state_space_from_json(load_json_file(opt.source));
}

Exosystem load_exosystem(const std::string& path, const PlantOptions& plant,
                         Eigen::Index state_dim) {
  if (!path.empty()) {
    return exosystem_from_json(load_json_file(path));
  }
  if (plant.source == "heat") {
    return benchmark_exosystem(state_dim);
  }
  throw PreconditionError("--exo is required unless the plant is `heat`");
}

Controller load_controller_file(const std::string& path) {
  json j = load_json_file(path);
  if (j.is_object() && j.contains("controller")) {
    return controller_from_json(j.at("controller"));
  }
  return controller_from_json(j);
}

std::vector<PerturbedPlant> load_members(const std::string& path) {
  json j = load_json_file(path);
  if (!j.is_array() || j.empty()) {
    throw IoError(path + ": expected a non-empty array of family members");
  }
  std::vector<PerturbedPlant> members;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("plant") || !item.contains("E") ||
        !item.contains("F")) {
      throw IoError(path + ": each member needs plant, E and F fields");
    }
    PerturbedPlant member;
    member.plant = state_space_from_json(item.at("plant"));
    member.E = matrix_from_json(item.at("E"), "E");
    member.F = matrix_from_json(item.at("F"), "F");
    members.push_back(std::move(member));
  }
  return members;
}

json to_json(const TriangularRecord& rec) {
  json j;
  j["G1"] = matrix_to_json(rec.G1);
  j["G2"] = matrix_to_json(rec.G2);
  j["K1"] = matrix_to_json(rec.K1);
  j["K2"] = matrix_to_json(rec.K2);
  j["L1"] = matrix_to_json(rec.L1);
  j["L"] = matrix_to_json(rec.L);
  j["H"] = matrix_to_json(rec.H);
  j["C1"] = matrix_to_json(rec.C1);
  return j;
}

json to_json(const ObserverRecord& rec) {
  json j;
  j["G1"] = matrix_to_json(rec.G1);
  j["G2"] = matrix_to_json(rec.G2);
  j["K1"] = matrix_to_json(rec.K1);
  j["K21"] = matrix_to_json(rec.K21);
  j["K2"] = matrix_to_json(rec.K2);
  j["L"] = matrix_to_json(rec.L);
  j["H"] = matrix_to_json(rec.H);
  j["B1"] = matrix_to_json(rec.B1);
  return j;
}

json to_json(const ReducedOrderInfo& info) {
  json j;
  j["retained_frequencies"] = info.retained_frequencies;
  j["subspace_dims"] = info.subspace_dims;
  j["full_dim"] = info.full_dim;
  j["reduced_dim"] = info.reduced_dim;
  return j;
}

struct DesignOptions {
  PlantOptions plant;
  std::string exo_path;
  std::string family = "minimal";
  std::string members_path;
  std::string out = "controller.json";
  double epsilon = 0.25;
  bool tune = false;
};

int run_design(const DesignOptions& opt) {
  StateSpace sys = load_plant(opt.plant);
  Exosystem exo = load_exosystem(opt.exo_path, opt.plant, sys.A.rows());

  json doc;
  json metadata;
  metadata["plant"] = opt.plant.source;
  metadata["family"] = opt.family;

  double epsilon = opt.epsilon;
  if (opt.tune) {
    if (opt.family != "minimal") {
      throw PreconditionError("--tune-epsilon only applies to --family minimal");
    }
    epsilon = tune_epsilon(sys, exo);
    metadata["epsilon_tuned"] = true;
  }

  Controller ctrl;
  if (opt.family == "minimal") {
    ctrl = minimal_controller(sys, exo, epsilon);
    metadata["epsilon"] = epsilon;
  } else if (opt.family == "minimal-real") {
    ctrl = minimal_controller_real(sys, exo, epsilon);
    metadata["epsilon"] = epsilon;
  } else if (opt.family == "minimal-reduced") {
    if (opt.members_path.empty()) {
      throw PreconditionError("--members is required for reduced families");
    }
    ReducedOrderInfo info;
    ctrl = reduced_order_minimal_controller(sys, exo,
                                            load_members(opt.members_path),
                                            epsilon, &info);
    metadata["epsilon"] = epsilon;
    metadata["reduced"] = to_json(info);
  } else if (opt.family == "triangular") {
    TriangularRecord rec;
    ctrl = triangular_controller(sys, exo, std::nullopt, std::nullopt, &rec);
    doc["record"] = to_json(rec);
  } else if (opt.family == "triangular-diag") {
    TriangularRecord rec;
    ctrl = triangular_controller_diag(sys, exo, std::nullopt, std::nullopt,
                                      &rec);
    doc["record"] = to_json(rec);
  } else if (opt.family == "triangular-reduced") {
    if (opt.members_path.empty()) {
      throw PreconditionError("--members is required for reduced families");
    }
    TriangularRecord rec;
    ctrl = triangular_controller_reduced(sys, exo,
                                         load_members(opt.members_path),
                                         std::nullopt, std::nullopt, &rec);
    doc["record"] = to_json(rec);
  } else if (opt.family == "observer") {
    ObserverRecord rec;
    ctrl = observer_controller(sys, exo, std::nullopt, std::nullopt,
                               std::nullopt, &rec);
    doc["record"] = to_json(rec);
  } else {
    ObserverRecord rec;
    ctrl = observer_controller_diag(sys, exo, std::nullopt, std::nullopt,
                                    std::nullopt, &rec);
    doc["record"] = to_json(rec);
  }

  RorpCertificate cert = certify_rorp(sys, ctrl, exo);
  doc["controller"] = to_json(ctrl);
  doc["certificate"] = to_json(cert);
  doc["metadata"] = metadata;
  write_text_file(opt.out, canonical_dump(doc));

  std::cout << "wrote " << opt.out << "\ncertificate: "
            << (cert.pass ? "pass" : "fail") << ", abscissa "
            << cert.abscissa << "\n";
  return cert.pass ? 0 : 3;
}

struct FileRunOptions {
  PlantOptions plant;
  std::string exo_path;
  std::string controller_path;
  std::string out;
};

int run_verify(const FileRunOptions& opt) {
  StateSpace sys = load_plant(opt.plant);
  Controller ctrl = load_controller_file(opt.controller_path);
  Exosystem exo = load_exosystem(opt.exo_path, opt.plant, sys.A.rows());
  RorpCertificate cert = certify_rorp(sys, ctrl, exo);
  const std::string body = canonical_dump(to_json(cert));
  if (!opt.out.empty()) {
    write_text_file(opt.out, body);
    std::cout << "wrote " << opt.out << "\n";
  }
  std::cout << body;
  return 0;
}

struct SimulateOptions {
  FileRunOptions files;
  double t_final = 16.0;
  double dt = 0.01;
  std::vector<double> v0;
  std::string csv = "trajectory.csv";
  std::string svg;
};

json summary_json(const SimResult& sim) {
  json j;
  j["alpha_hat"] = std::isfinite(sim.alpha_hat) ? json(sim.alpha_hat)
                                                : json("converged");
  j["r_squared"] = sim.r_squared;
  j["terminal_error"] = sim.terminal_error;
  json per_output = json::array();
  const Eigen::Index cols = sim.t.size();
  const double t_tail = 0.75 * sim.t(cols - 1) - 1e-9;
  for (Eigen::Index i = 0; i < sim.e.rows(); ++i) {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (sim.t(c) < t_tail) continue;
      worst = std::max(worst, std::abs(sim.e(i, c)));
    }
    per_output.push_back(worst);
  }
  j["terminal_error_per_output"] = std::move(per_output);
  return j;
}

int run_simulate(const SimulateOptions& opt) {
  StateSpace sys = load_plant(opt.files.plant);
  Controller ctrl = load_controller_file(opt.files.controller_path);
  Exosystem exo = load_exosystem(opt.files.exo_path, opt.files.plant,
                                 sys.A.rows());
  ClosedLoop cl = assemble_closed_loop(sys, ctrl, exo);
  Vec v0;
  if (opt.v0.empty()) {
    v0 = Vec::Ones(exo.S.rows());
  } else {
    if (static_cast<Eigen::Index>(opt.v0.size()) != exo.S.rows()) {
      throw PreconditionError("--v0 needs one entry per exosystem state");
    }
    v0 = Vec::Zero(exo.S.rows());
    for (Eigen::Index i = 0; i < v0.size(); ++i) {
      v0(i) = Complex(opt.v0[static_cast<std::size_t>(i)]);
    }
  }
  SimResult sim = simulate(cl, exo, Vec::Zero(cl.Ae.rows()), v0, opt.t_final,
                           opt.dt);
  write_text_file(opt.csv, trajectory_csv(sim));
  std::cout << "wrote " << opt.csv << "\n";
  if (!opt.svg.empty()) {
    write_text_file(opt.svg, trajectory_svg(sim));
    std::cout << "wrote " << opt.svg << "\n";
  }
  std::cout << canonical_dump(summary_json(sim));
  return 0;
}

struct SweepOptions {
  FileRunOptions files;
  double delta = 1e-2;
  int samples = 50;
  std::uint64_t seed = 0;
  double t_final = 16.0;
  double dt = 0.01;
  double terminal_tol = 0.05;
};

int run_sweep(const SweepOptions& opt) {
  StateSpace sys = load_plant(opt.files.plant);
  Controller ctrl = load_controller_file(opt.files.controller_path);
  Exosystem exo = load_exosystem(opt.files.exo_path, opt.files.plant,
                                 sys.A.rows());
  SweepReport report =
      robustness_sweep(sys, ctrl, exo, opt.delta, opt.samples, opt.seed,
                       opt.t_final, opt.dt, opt.terminal_tol);
  const std::string out =
      opt.files.out.empty() ? std::string("sweep.json") : opt.files.out;
  write_text_file(out, canonical_dump(to_json(report)));
  std::cout << "wrote " << out << "\nhurwitz " << report.n_hurwitz << "/"
            << report.samples << ", tracking " << report.n_tracking << "/"
            << report.n_hurwitz << "\n";
  return 0;
}

struct HeatDemoOptions {
  int modes = 10;
  double kappa = 1.0;
  double epsilon = 0.25;
  double t_final = 16.0;
  double dt = 0.01;
  int modes_check = 0;
  std::string prefix = "heat_demo";
};

int run_heat_demo(const HeatDemoOptions& opt) {
  HeatModelConfig cfg;
  cfg.modes_per_axis = opt.modes;
  cfg.kappa = opt.kappa;
  HeatPlant heat = build_heat_plant(cfg);
  Exosystem exo = benchmark_exosystem(heat.stabilized.A.rows());

  if (opt.modes_check > 0) {
    HeatModelConfig other = cfg;
    other.modes_per_axis = opt.modes_check;
    StateSpace refined = build_heat_plant(other).stabilized;
    std::cout << "transfer function convergence, " << opt.modes << " vs "
              << opt.modes_check << " modes per axis\n";
    for (double w : exo.frequencies) {
      const Complex s(0.0, w);
      const double gap =
          (transfer_eval(heat.stabilized, s) - transfer_eval(refined, s))
              .norm();
      std::printf("  w = %+.6f  |P_N(iw) - P_M(iw)| = %.3e\n", w, gap);
    }
  }

  Controller ctrl = minimal_controller(heat.stabilized, exo, opt.epsilon);
  ClosedLoop cl = assemble_closed_loop(heat.stabilized, ctrl, exo);
  SimResult sim = simulate(cl, exo, Vec::Zero(cl.Ae.rows()),
                           Vec::Ones(exo.S.rows()), opt.t_final, opt.dt);

  write_text_file(opt.prefix + ".csv", trajectory_csv(sim));
  write_text_file(opt.prefix + ".svg", trajectory_svg(sim));
  json summary = summary_json(sim);
  summary["modes"] = opt.modes;
  summary["kappa"] = opt.kappa;
  summary["epsilon"] = opt.epsilon;
  summary["t_final"] = opt.t_final;
  summary["dt"] = opt.dt;
  summary["abscissa"] = spectral_abscissa(cl.Ae);
  write_text_file(opt.prefix + ".json", canonical_dump(summary));

  std::cout << "wrote " << opt.prefix << ".csv, " << opt.prefix << ".svg, "
            << opt.prefix << ".json\n"
            << canonical_dump(summary);
  return 0;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const IoError& err) {
    std::cerr << "io error: " << err.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "io error: " << err.what() << "\n";
    return 1;
  } catch (const PreconditionError& err) {
    std::cerr << "precondition violated: " << err.what() << "\n";
    return 2;
  } catch (const SynthesisError& err) {
    std::cerr << "synthesis failed: " << err.what() << "\n";
    return 3;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust output regulation: design, verify, simulate"};
  app.require_subcommand(1);

  static const std::vector<std::string> kFamilies = {
      "minimal",          "minimal-real",       "minimal-reduced",
      "triangular",       "triangular-diag",    "triangular-reduced",
      "observer",         "observer-diag"};

  DesignOptions design_opt;
  CLI::App* design = app.add_subcommand(
      "design", "synthesize a controller and certify the closed loop");
  add_plant_flags(design, design_opt.plant);
  design->add_option("--exo", design_opt.exo_path,
                     "exosystem json file (defaults to the heat benchmark)");
  design->add_option("--family", design_opt.family, "controller family")
      ->check(CLI::IsMember(kFamilies))
      ->capture_default_str();
  design->add_option("--epsilon", design_opt.epsilon, "gain scale")
      ->capture_default_str();
  design->add_flag("--tune-epsilon", design_opt.tune,
                   "search for the largest admissible gain scale");
  design->add_option("--members", design_opt.members_path,
                     "json array of perturbation family members");
  design->add_option("--out", design_opt.out, "output document")
      ->capture_default_str();

  FileRunOptions verify_opt;
  CLI::App* verify = app.add_subcommand(
      "verify", "check the internal model conditions and stability");
  add_plant_flags(verify, verify_opt.plant);
  verify->add_option("--exo", verify_opt.exo_path, "exosystem json file");
  verify->add_option("--controller", verify_opt.controller_path,
                     "controller json file")
      ->required();
  verify->add_option("--out", verify_opt.out, "also write the report here");

  SimulateOptions sim_opt;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "integrate the closed loop and write trajectories");
  add_plant_flags(sim_cmd, sim_opt.files.plant);
  sim_cmd->add_option("--exo", sim_opt.files.exo_path, "exosystem json file");
  sim_cmd->add_option("--controller", sim_opt.files.controller_path,
                      "controller json file")
      ->required();
  sim_cmd->add_option("--tfinal", sim_opt.t_final, "simulation horizon")
      ->capture_default_str();
  sim_cmd->add_option("--dt", sim_opt.dt, "step size")->capture_default_str();
  sim_cmd->add_option("--v0", sim_opt.v0,
                      "initial exosystem state, comma separated")
      ->delimiter(',');
  sim_cmd->add_option("--csv", sim_opt.csv, "trajectory csv path")
      ->capture_default_str();
  sim_cmd->add_option("--svg", sim_opt.svg, "optional line plot path");

  SweepOptions sweep_opt;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "sample plant perturbations and re-check tracking");
  add_plant_flags(sweep, sweep_opt.files.plant);
  sweep->add_option("--exo", sweep_opt.files.exo_path, "exosystem json file");
  sweep->add_option("--controller", sweep_opt.files.controller_path,
                    "controller json file")
      ->required();
  sweep->add_option("--delta", sweep_opt.delta, "relative perturbation size")
      ->capture_default_str();
  sweep->add_option("--samples", sweep_opt.samples, "number of samples")
      ->capture_default_str();
  sweep->add_option("--seed", sweep_opt.seed, "base seed")
      ->capture_default_str();
  sweep->add_option("--tfinal", sweep_opt.t_final, "simulation horizon")
      ->capture_default_str();
  sweep->add_option("--dt", sweep_opt.dt, "step size")->capture_default_str();
  sweep->add_option("--terminal-tol", sweep_opt.terminal_tol,
                    "tracking threshold on the terminal error")
      ->capture_default_str();
  sweep->add_option("--out", sweep_opt.files.out, "report path");

  HeatDemoOptions demo_opt;
  CLI::App* demo = app.add_subcommand(
      "heat-demo", "end-to-end run of the boundary controlled heat benchmark");
  demo->add_option("--modes", demo_opt.modes, "modes per axis")
      ->capture_default_str();
  demo->add_option("--kappa", demo_opt.kappa, "pre-stabilization gain")
      ->capture_default_str();
  demo->add_option("--epsilon", demo_opt.epsilon, "gain scale")
      ->capture_default_str();
  demo->add_option("--tfinal", demo_opt.t_final, "simulation horizon")
      ->capture_default_str();
  demo->add_option("--dt", demo_opt.dt, "step size")->capture_default_str();
  demo->add_option("--modes-check", demo_opt.modes_check,
                   "print a transfer function convergence table against this "
                   "refinement");
  demo->add_option("--out-prefix", demo_opt.prefix, "artifact path prefix")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (design->parsed()) return guarded([&] { return run_design(design_opt); });
  if (verify->parsed()) return guarded([&] { return run_verify(verify_opt); });
  if (sim_cmd->parsed()) return guarded([&] { return run_simulate(sim_opt); });
  if (sweep->parsed()) return guarded([&] { return run_sweep(sweep_opt); });
  return guarded([&] { return run_heat_demo(demo_opt); });
}
