#pragma once
// File formats for the CLI pipeline: CSV for tabular data, JSON for
// structured results. Every artifact embeds the config hash and seed that
// produced it so reruns are byte-for-byte reproducible.

#include "posbias/embedding.hpp"
#include "posbias/metrics.hpp"
#include "posbias/rem.hpp"
#include "posbias/simulator.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace posbias {

// Provenance stamp carried by every artifact file.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

// FNV-1a over the canonical (sorted-key, compact) JSON dump.
std::string config_hash(const nlohmann::json& config);

// --- JSON bindings for configs -------------------------------------------
nlohmann::json to_json(const SimConfig& config);
SimConfig sim_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const gbdt::GbdtConfig& config);
gbdt::GbdtConfig gbdt_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EmConfig& config);
EmConfig em_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvalConfig& config);
EvalConfig eval_config_from_json(const nlohmann::json& j);

// --- interaction log CSV ---------------------------------------------------
// Header: u0,...,u{d-1},item_id,click,position. A leading '#' comment line
// carries the provenance stamp; loaders skip any '#' lines, so externally
// produced logs in the same schema load too.
void write_log_csv(const std::filesystem::path& path, const InteractionLog& log,
                   const Provenance& prov);
InteractionLog read_log_csv(const std::filesystem::path& path);

// --- ground truth JSON -------------------------------------------------------
void write_truth_json(const std::filesystem::path& path, const GroundTruth& truth,
                      const Provenance& prov);
GroundTruth read_truth_json(const std::filesystem::path& path);

// --- matrices as CSV (one row per item) -------------------------------------
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& mat,
                      const Provenance& prov);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

void write_assignment_csv(const std::filesystem::path& path, const AssignmentMatrix& a,
                          const Provenance& prov);
AssignmentMatrix read_assignment_csv(const std::filesystem::path& path);

// --- fitted EM state JSON ----------------------------------------------------
void write_emstate_json(const std::filesystem::path& path, const EmState& state,
                        const Provenance& prov);
EmState read_emstate_json(const std::filesystem::path& path);

// --- evaluation reports ------------------------------------------------------
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Aligned plain-text comparison table; one row per method.
std::string render_report_table(const std::vector<EvalReport>& reports);

void write_text_file(const std::filesystem::path& path, const std::string& content);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace posbias
