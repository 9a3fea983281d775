#include "regsyn/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace regsyn {

namespace {

using nlohmann::json;

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double number_at(const json& j, const std::string& name) {
  if (!j.is_number()) {
    throw IoError(name + ": expected a number, got " + std::string(j.type_name()));
  }
  return j.get<double>();
}

Complex entry_from_json(const json& j, const std::string& name) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2) {
    return Complex(number_at(j[0], name), number_at(j[1], name));
  }
  throw IoError(name + ": matrix entries must be numbers or [re, im] pairs");
}

const json& member(const json& j, const std::string& key,
                   const std::string& who) {
  if (!j.is_object() || !j.contains(key)) {
    throw IoError(who + ": missing field \"" + key + "\"");
  }
  return j.at(key);
}

}  // namespace

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const Complex z = m(i, j);
      if (z.imag() == 0.0) {
        row.push_back(z.real());
      } else {
        row.push_back(json::array({z.real(), z.imag()}));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) {
    throw IoError(name + ": expected an array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Mat(0, 0);
  if (!j[0].is_array()) {
    throw IoError(name + ": rows must be arrays");
  }
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw IoError(name + ": row " + std::to_string(i) +
                    " has inconsistent length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = entry_from_json(row[static_cast<std::size_t>(c)],
                                name + "[" + std::to_string(i) + "][" +
                                    std::to_string(c) + "]");
    }
  }
  return m;
}

json to_json(const StateSpace& sys) {
  json j;
  j["A"] = matrix_to_json(sys.A);
  j["B"] = matrix_to_json(sys.B);
  j["C"] = matrix_to_json(sys.C);
  j["D"] = matrix_to_json(sys.D);
  return j;
}

StateSpace state_space_from_json(const json& j) {
  StateSpace sys;
  sys.A = matrix_from_json(member(j, "A", "plant"), "A");
  sys.B = matrix_from_json(member(j, "B", "plant"), "B");
  sys.C = matrix_from_json(member(j, "C", "plant"), "C");
  sys.D = matrix_from_json(member(j, "D", "plant"), "D");
  if (sys.A.rows() != sys.A.cols() || sys.B.rows() != sys.A.rows() ||
      sys.C.cols() != sys.A.rows() || sys.D.rows() != sys.C.rows() ||
      sys.D.cols() != sys.B.cols()) {
    throw IoError("plant: matrix shapes are inconsistent");
  }
  return sys;
}

json to_json(const Exosystem& exo) {
  json j;
  j["frequencies"] = exo.frequencies;
  j["jordan_sizes"] = exo.jordan_sizes;
  j["E"] = matrix_to_json(exo.E);
  j["F"] = matrix_to_json(exo.F);
  return j;
}

Exosystem exosystem_from_json(const json& j) {
  const json& freqs = member(j, "frequencies", "exosystem");
  const json& sizes = member(j, "jordan_sizes", "exosystem");
  if (!freqs.is_array() || !sizes.is_array()) {
    throw IoError("exosystem: frequencies and jordan_sizes must be arrays");
  }
  std::vector<double> frequencies;
  for (const auto& f : freqs) frequencies.push_back(number_at(f, "frequencies"));
  std::vector<int> jordan_sizes;
  for (const auto& s : sizes) {
    jordan_sizes.push_back(static_cast<int>(number_at(s, "jordan_sizes")));
  }
  Mat e = matrix_from_json(member(j, "E", "exosystem"), "E");
  Mat f = matrix_from_json(member(j, "F", "exosystem"), "F");
  try {
    return exosystem_from_frequencies(frequencies, jordan_sizes, e, f);
  } catch (const PreconditionError& err) {
    throw IoError(std::string("exosystem: ") + err.what());
  }
}

json to_json(const Controller& ctrl) {
  json j;
  j["family"] = ctrl.family;
  j["G1"] = matrix_to_json(ctrl.G1);
  j["G2"] = matrix_to_json(ctrl.G2);
  j["K"] = matrix_to_json(ctrl.K);
  j["parameters"] = json::object();
  for (const auto& [key, value] : ctrl.parameters) {
    j["parameters"][key] = value;
  }
  return j;
}

Controller controller_from_json(const json& j) {
  Controller ctrl;
  const json& family = member(j, "family", "controller");
  if (!family.is_string()) {
    throw IoError("controller: family must be a string");
  }
  ctrl.family = family.get<std::string>();
  ctrl.G1 = matrix_from_json(member(j, "G1", "controller"), "G1");
  ctrl.G2 = matrix_from_json(member(j, "G2", "controller"), "G2");
  ctrl.K = matrix_from_json(member(j, "K", "controller"), "K");
  if (ctrl.G1.rows() != ctrl.G1.cols() || ctrl.G2.rows() != ctrl.G1.rows() ||
      ctrl.K.cols() != ctrl.G1.rows()) {
    throw IoError("controller: matrix shapes are inconsistent");
  }
  if (j.contains("parameters")) {
    const json& params = j.at("parameters");
    if (!params.is_object()) {
      throw IoError("controller: parameters must be an object");
    }
    for (auto it = params.begin(); it != params.end(); ++it) {
      ctrl.parameters[it.key()] = number_at(it.value(), it.key());
    }
  }
  return ctrl;
}

json to_json(const RorpCertificate& cert) {
  json j;
  j["pass"] = cert.pass;
  j["hurwitz"] = cert.hurwitz;
  j["abscissa"] = cert.abscissa;
  json freqs = json::array();
  for (const auto& fr : cert.g_conditions.per_frequency) {
    json f;
    f["frequency"] = fr.frequency;
    f["range_intersection_trivial"] = fr.range_intersection_trivial;
    f["g2_injective"] = fr.g2_injective;
    f["kernel_inside_range"] = fr.kernel_inside_range;
    f["rank_gap_intersection"] = fr.rank_gap_intersection;
    f["rank_gap_injectivity"] = fr.rank_gap_injectivity;
    f["rank_gap_kernel"] = fr.rank_gap_kernel;
    freqs.push_back(std::move(f));
  }
  j["g_conditions"] = {{"pass", cert.g_conditions.pass},
                       {"per_frequency", std::move(freqs)}};
  j["p_copy"] = {{"pass", cert.p_copy.pass},
                 {"kernel_dims", cert.p_copy.kernel_dims},
                 {"long_chain_counts", cert.p_copy.long_chain_counts}};
  return j;
}

json to_json(const SweepReport& report) {
  json j;
  j["delta"] = report.delta;
  j["samples"] = report.samples;
  j["seed"] = report.seed;
  j["terminal_tol"] = report.terminal_tol;
  j["n_hurwitz"] = report.n_hurwitz;
  j["n_tracking"] = report.n_tracking;
  json entries = json::array();
  for (const auto& s : report.entries) {
    json e;
    e["seed"] = s.seed;
    e["hurwitz"] = s.hurwitz;
    e["abscissa"] = s.abscissa;
    e["alpha_hat"] = std::isfinite(s.alpha_hat) ? json(s.alpha_hat)
                                                : json("converged");
    e["terminal_error"] = s.terminal_error;
    e["tracking"] = s.tracking;
    entries.push_back(std::move(e));
  }
  j["entries"] = std::move(entries);
  return j;
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw IoError(path + ": " + err.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << content;
  if (!out) {
    throw IoError("short write to " + path);
  }
}

namespace {

bool needs_imaginary_columns(const SimResult& sim) {
  double real_scale = 0.0;
  double imag_scale = 0.0;
  for (const Mat* m : {&sim.y, &sim.y_ref, &sim.e}) {
    if (m->size() == 0) continue;
    real_scale = std::max(real_scale, m->real().cwiseAbs().maxCoeff());
    imag_scale = std::max(imag_scale, m->imag().cwiseAbs().maxCoeff());
  }
  return imag_scale > 1e-9 * std::max(1.0, real_scale);
}

void append_group_header(std::string& out, const std::string& stem,
                         Eigen::Index p, bool with_imag) {
  for (Eigen::Index i = 0; i < p; ++i) {
    const std::string base = stem + std::to_string(i + 1);
    if (with_imag) {
      out += "," + base + "_re," + base + "_im";
    } else {
      out += "," + base;
    }
  }
}

void append_group_row(std::string& out, const Mat& m, Eigen::Index col,
                      bool with_imag) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += ",";
    out += format_double(m(i, col).real());
    if (with_imag) {
      out += ",";
      out += format_double(m(i, col).imag());
    }
  }
}

}  // namespace

std::string trajectory_csv(const SimResult& sim) {
  const bool with_imag = needs_imaginary_columns(sim);
  const Eigen::Index p = sim.y.rows();
  std::string out = "t";
  append_group_header(out, "y", p, with_imag);
  append_group_header(out, "yref", p, with_imag);
  append_group_header(out, "e", p, with_imag);
  out += "\n";
  for (Eigen::Index j = 0; j < sim.t.size(); ++j) {
    out += format_double(sim.t(j));
    append_group_row(out, sim.y, j, with_imag);
    append_group_row(out, sim.y_ref, j, with_imag);
    append_group_row(out, sim.e, j, with_imag);
    out += "\n";
  }
  return out;
}

namespace {

constexpr double kPlotWidth = 840.0;
constexpr double kPlotHeight = 420.0;
constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 20.0;
constexpr double kMarginBottom = 40.0;

const char* stroke_color(Eigen::Index i) {
  static const char* kPalette[] = {"#1f6fb2", "#c23b22", "#2e8540",
                                   "#8031a7", "#b8860b", "#11707f"};
  return kPalette[i % 6];
}

std::string polyline(const RealVec& t, const Mat& values, Eigen::Index row,
                     double t_max, double y_lo, double y_hi,
                     const char* color, bool dashed) {
  const double x_span = kPlotWidth - kMarginLeft - kMarginRight;
  const double y_span = kPlotHeight - kMarginTop - kMarginBottom;
  std::string pts;
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    const double x = kMarginLeft + x_span * (t_max > 0 ? t(j) / t_max : 0.0);
    const double frac = (values(row, j).real() - y_lo) / (y_hi - y_lo);
    const double y = kMarginTop + y_span * (1.0 - frac);
    if (!pts.empty()) pts += " ";
    pts += format_double(x) + "," + format_double(y);
  }
  std::string line = "<polyline fill=\"none\" stroke=\"";
  line += color;
  line += "\" stroke-width=\"1.5\"";
  if (dashed) line += " stroke-dasharray=\"6 4\"";
  line += " points=\"" + pts + "\"/>\n";
  return line;
}

}  // namespace

std::string trajectory_svg(const SimResult& sim) {
  const Eigen::Index p = sim.y.rows();
  const double t_max = sim.t.size() > 0 ? sim.t(sim.t.size() - 1) : 1.0;
  double y_lo = 0.0, y_hi = 0.0;
  if (sim.y.size() > 0) {
    y_lo = std::min(sim.y.real().minCoeff(), sim.y_ref.real().minCoeff());
    y_hi = std::max(sim.y.real().maxCoeff(), sim.y_ref.real().maxCoeff());
  }
  if (y_hi - y_lo < 1e-9) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"840\" height=\"420\" "
      "viewBox=\"0 0 840 420\">\n"
      "<rect width=\"840\" height=\"420\" fill=\"white\"/>\n";
  // Axes.
  svg += "<line x1=\"" + format_double(kMarginLeft) + "\" y1=\"" +
         format_double(kMarginTop) + "\" x2=\"" + format_double(kMarginLeft) +
         "\" y2=\"" + format_double(kPlotHeight - kMarginBottom) +
         "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + format_double(kMarginLeft) + "\" y1=\"" +
         format_double(kPlotHeight - kMarginBottom) + "\" x2=\"" +
         format_double(kPlotWidth - kMarginRight) + "\" y2=\"" +
         format_double(kPlotHeight - kMarginBottom) +
         "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"8\" y=\"" + format_double(kMarginTop + 10.0) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" +
         format_double(y_hi) + "</text>\n";
  svg += "<text x=\"8\" y=\"" + format_double(kPlotHeight - kMarginBottom) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" +
         format_double(y_lo) + "</text>\n";
  svg += "<text x=\"" + format_double(kPlotWidth - kMarginRight - 30.0) +
         "\" y=\"" + format_double(kPlotHeight - 12.0) +
         "\" font-family=\"sans-serif\" font-size=\"12\">t = " +
         format_double(t_max) + "</text>\n";

  for (Eigen::Index i = 0; i < p; ++i) {
    svg += polyline(sim.t, sim.y_ref, i, t_max, y_lo, y_hi, "#999999", true);
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    svg += polyline(sim.t, sim.y, i, t_max, y_lo, y_hi, stroke_color(i), false);
    svg += "<text x=\"" + format_double(kMarginLeft + 8.0 + 52.0 * i) +
           "\" y=\"" + format_double(kMarginTop + 14.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" +
           stroke_color(i) + "\">y" + std::to_string(i + 1) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace regsyn
