#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ktube/config.hpp"
#include "ktube/planner.hpp"
#include "ktube/provenance.hpp"

namespace ktube::cli {

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns 0 on success, 1 on validation errors, 2 on numerical
/// failures; errors are written to `err` as one JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Artifacts of the planning stage.
struct PlanOutcome {
  Plan nominal;        ///< obstacle-aware plan from the nominal x0
  Plan unconstrained;  ///< same start, obstacle ignored
  MonteCarloResult monte_carlo;
};

PlanOutcome run_plan_stage(const TubeModel& model, const PlanConfig& config, std::uint64_t seed);

/// Writers used by the subcommands. Each embeds the provenance.
void write_model(const std::filesystem::path& path, const TubeModel& model, const Provenance& prov);
void write_trajectory_csv(const std::filesystem::path& path, const Plan& plan, const Provenance& prov);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, const Provenance& prov);
PointSet read_points_csv(const std::filesystem::path& path);

/// Reference values for the summary report: the published Table 1 numbers.
nlohmann::json reference_comparison(const TubeModel& model, const ValidationReport& validation,
                                    const PlanOutcome* plan, const ExperimentConfig& config);

}  // namespace ktube::cli
