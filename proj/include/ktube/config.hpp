#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ktube/pipeline.hpp"
#include "ktube/planner.hpp"

namespace ktube {

/// Everything one experiment needs: identification settings, planner
/// settings and the validation sample count.
struct ExperimentConfig {
  IdentifyConfig identify;
  PlanConfig plan;
  Index validation_samples = 100000;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Missing keys keep their defaults; unknown keys and type mismatches raise
/// ValidationError naming the field.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ktube
