#include "ktube/config.hpp"

#include <fstream>
#include <set>

namespace ktube {

namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string(key) + ": wrong type (got " + j.at(key).type_name() + ")");
  }
}

// Sub-objects raise their own ValidationError; wrap only raw json errors.
template <class T>
void read_object(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string(key) + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  identify.validate();
  plan.validate();
  require(validation_samples >= 1, "validation_samples: must be >= 1");
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  const IdentifyConfig& id = c.identify;
  j = nlohmann::json{
      {"kernel", id.kernel},
      {"sim", id.sim},
      {"tau", id.tau},
      {"R", id.R},
      {"eps", id.eps},
      {"beta", id.beta},
      {"candidate_count", id.candidate_count},
      {"max_basis", id.max_basis},
      {"greedy_wiring", std::string(wiring_name(id.wiring))},
      {"seeds", id.seeds},
      {"solver",
       {{"tol", id.solver.tol},
        {"regularization", id.solver.regularization},
        {"active_tol", id.solver.active_tol},
        {"max_iter", id.solver.max_iter}}},
      {"validation_samples", c.validation_samples},
      {"plan", c.plan},
  };
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  require(j.is_object(), "config: expected a JSON object");
  static const std::set<std::string> known{"kernel",    "sim",        "tau",           "R",
                                           "eps",       "beta",       "candidate_count", "max_basis",
                                           "greedy_wiring", "seeds",  "solver",        "validation_samples",
                                           "plan",      "comment"};
  for (const auto& [key, value] : j.items()) {
    require(known.count(key) > 0, key + ": unknown configuration field");
  }
  c = ExperimentConfig{};
  IdentifyConfig& id = c.identify;
  read_object(j, "kernel", id.kernel);
  read_object(j, "sim", id.sim);
  read_field(j, "tau", id.tau);
  read_field(j, "R", id.R);
  read_field(j, "eps", id.eps);
  read_field(j, "beta", id.beta);
  read_field(j, "candidate_count", id.candidate_count);
  read_field(j, "max_basis", id.max_basis);
  if (j.contains("greedy_wiring")) {
    std::string w;
    read_field(j, "greedy_wiring", w);
    id.wiring = wiring_from_name(w);
  }
  read_object(j, "seeds", id.seeds);
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    require(s.is_object(), "solver: expected an object");
    read_field(s, "tol", id.solver.tol);
    read_field(s, "regularization", id.solver.regularization);
    read_field(s, "active_tol", id.solver.active_tol);
    read_field(s, "max_iter", id.solver.max_iter);
    read_field(s, "verbose", id.solver.verbose);
    require(id.solver.tol > 0, "solver.tol: must be positive");
    require(id.solver.regularization >= 0, "solver.regularization: must be non-negative");
    require(id.solver.max_iter >= 1, "solver.max_iter: must be >= 1");
  }
  read_field(j, "validation_samples", c.validation_samples);
  read_object(j, "plan", c.plan);
  c.validate();
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "config: cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config: malformed JSON in '" + path.string() + "': " + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return read_json_file(path).get<ExperimentConfig>();
}

}  // namespace ktube
