#pragma once

#include <string>

#include "mgdde/comm_graph.hpp"
#include "mgdde/linear_model.hpp"
#include "mgdde/model.hpp"
#include "mgdde/time_domain.hpp"

#include <nlohmann/json_fwd.hpp>

namespace mgdde {

struct ScenarioTiming {
  double step_time = 1.0;
  double end_time = 30.0;
};

struct SolverTolerances {
  double newton = 1e-10;
  double dde_rel = 1e-8;
  double dde_abs = 1e-10;
  double nonlinear_step = 1e-4;
};

/// Fully validated scenario. `network.loads` holds the pre-step loads.
struct ScenarioConfig {
  NetworkSpec network;
  std::vector<LoadSpec> post_step_loads;
  CommGraph graph;
  ConsensusVariant consensus_variant = ConsensusVariant::ReferenceTracking;
  double diffusion_constant = 0.0;
  double delay = 0.0;
  int spectral_order = 20;
  ScenarioTiming timing;
  SolverTolerances tolerances;

  LoadStepScenario load_step() const;
};

/// Parses and validates a scenario file. Unknown keys are rejected; error
/// messages name the offending key. Defaults: load_interpretation "as-given",
/// power_scale from the interpretation, consensus_variant
/// "reference-tracking", delay 0, spectral_order 20, timing {1, 30},
/// module-default tolerances.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_json(const nlohmann::json& j, const std::string& origin = "config");

}  // namespace mgdde
