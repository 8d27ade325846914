#pragma once
// End-to-end pipeline: simulate a uniform log, sparsify it to the
// single-slot regime, then estimate position bias with the identity, LSI
// and VAE assignments and compare against ground truth over several trials.

#include "posbias/io.hpp"
#include "posbias/metrics.hpp"
#include "posbias/rem.hpp"
#include "posbias/simulator.hpp"
#include "posbias/vae.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace posbias {

struct EmbeddingConfig {
  EmbedMethod method = EmbedMethod::lsi;
  int m = 8;
  double temperature = 1.0;
  bool standardize_rows = true;
  VaeConfig vae;

  void validate() const;
};

nlohmann::json to_json(const EmbeddingConfig& config);
EmbeddingConfig embedding_config_from_json(const nlohmann::json& j);

struct PipelineConfig {
  SimConfig sim;
  EmbeddingConfig embedding;  // m / temperature shared by lsi and vae rows
  EmConfig em;
  EvalConfig eval;
  std::filesystem::path output_dir = "out";

  // Methods compared by the pipeline subcommand, in report order.
  std::vector<EmbedMethod> methods = {EmbedMethod::identity, EmbedMethod::vae,
                                      EmbedMethod::lsi};
};

nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

// Builds the assignment for one method from the ground-truth item features.
AssignmentMatrix build_assignment(const GroundTruth& truth, const EmbeddingConfig& config,
                                  std::uint64_t seed);

// Human-readable row label matching the comparison tables: identity ->
// "REM", others -> "<METHOD> + REM".
std::string method_label(EmbedMethod method);

struct PipelineResult {
  std::vector<EvalReport> reports;  // one per method
  nlohmann::json report_json;
  std::string report_table;
};

// Runs the full multi-trial comparison. When write_artifacts is set, logs,
// assignments and fitted states for every trial land under
// output_dir/trial<t>/<method>/.
PipelineResult run_pipeline(const PipelineConfig& config, bool write_artifacts = true);

}  // namespace posbias
