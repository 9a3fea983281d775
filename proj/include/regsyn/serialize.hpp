#pragma once

#include "regsyn/internal_model.hpp"
#include "regsyn/simulate.hpp"
#include "regsyn/state_space.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace regsyn {

// File cannot be read or written, or its contents do not parse into the
// documented schema.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrix entries serialize as plain numbers when the imaginary part is zero
// and as [re, im] pairs otherwise; a matrix is an array of row arrays.
nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j, const std::string& name);

nlohmann::json to_json(const StateSpace& sys);
StateSpace state_space_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Exosystem& exo);
Exosystem exosystem_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Controller& ctrl);
Controller controller_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RorpCertificate& cert);
nlohmann::json to_json(const SweepReport& report);

// Canonical text form used for every file the tool writes; re-serializing a
// parsed document reproduces the bytes exactly.
std::string canonical_dump(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Columns t, y1..yp, yref1..yp, e1..ep; trajectories with a nonvanishing
// imaginary part emit _re/_im column pairs instead.
std::string trajectory_csv(const SimResult& sim);

// Self-contained line plot of outputs against references.
std::string trajectory_svg(const SimResult& sim);

}  // namespace regsyn
