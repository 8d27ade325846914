// posbias: simulate logged clicks, embed items, estimate position bias with
// regression EM, and evaluate against ground truth.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error.

#include "posbias/io.hpp"
#include "posbias/pipeline.hpp"
#include "posbias/rng.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

namespace fs = std::filesystem;
using nlohmann::json;
using namespace posbias;

// --out paths resolve under $POSBIAS_OUTPUT_ROOT when it is set and the path
// is relative.
fs::path resolve_out(const fs::path& path) {
  if (path.is_absolute()) return path;
  if (const char* root = std::getenv("POSBIAS_OUTPUT_ROOT")) return fs::path(root) / path;
  return path;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  return read_json_file(path);
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "override the config seed");
}

int cmd_simulate(const CommonFlags& flags) {
  json cfg = load_config(flags.config_path);
  SimConfig sim = sim_config_from_json(cfg.value("sim", json::object()));
  if (flags.seed) sim.seed = *flags.seed;

  const std::string hash = config_hash(to_json(sim));
  const GroundTruth truth = make_ground_truth(sim);
  const LoggingPolicy policy = make_policy(sim);
  const InteractionLog log = simulate_log(truth, policy, sim);

  const fs::path out = resolve_out(flags.out_dir);
  const Provenance prov{hash, sim.seed};
  write_log_csv(out / "log.csv", log, prov);
  write_truth_json(out / "truth.json", truth, prov);
  json pi = json::array();
  for (Eigen::Index i = 0; i < policy.values().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < policy.values().cols(); ++k)
      row.push_back(policy.values()(i, k));
    pi.push_back(std::move(row));
  }
  write_json_file(out / "policy.json", json{{"config_hash", hash},
                                            {"seed", sim.seed},
                                            {"kind", to_string(sim.policy_kind)},
                                            {"pi", std::move(pi)}});
  std::cout << "simulate: wrote " << (out / "log.csv").string() << " ("
            << log.size() << " records), " << (out / "truth.json").string() << "\n";
  return 0;
}

int cmd_embed(const CommonFlags& flags, const std::string& truth_path,
              const std::string& features_path, const std::string& method_name, int m,
              double temperature, bool no_standardize) {
  json cfg = load_config(flags.config_path);
  EmbeddingConfig emb = embedding_config_from_json(cfg.value("embedding", json::object()));
  if (!method_name.empty()) emb.method = embed_method_from_string(method_name);
  if (m > 0) emb.m = m;
  if (temperature > 0) emb.temperature = temperature;
  if (no_standardize) emb.standardize_rows = false;
  if (flags.seed) emb.vae.seed = *flags.seed;

  Eigen::MatrixXd features;
  GroundTruth truth;
  if (!truth_path.empty()) {
    truth = read_truth_json(truth_path);
    features = truth.item_features;
  } else if (!features_path.empty()) {
    features = read_matrix_csv(features_path);
  } else {
    throw std::invalid_argument("embed: need --truth or --features");
  }

  const std::string hash = config_hash(to_json(emb));
  const fs::path out = resolve_out(flags.out_dir);
  const Provenance prov{hash, emb.vae.seed};

  AssignmentMatrix assignment = [&] {
    if (emb.method == EmbedMethod::identity)
      return identity_assignment(static_cast<int>(features.rows()));
    if (emb.method == EmbedMethod::lsi) {
      const LsiModel lsi = lsi_embed(features, emb.m);
      write_matrix_csv(out / "embedding.csv", lsi.embedding.values, prov);
      return to_assignment(lsi.embedding, emb.temperature, emb.standardize_rows);
    }
    const EmbeddingMatrix e = vae_embed(features, emb.m, emb.vae);
    write_matrix_csv(out / "embedding.csv", e.values, prov);
    return to_assignment(e, emb.temperature, emb.standardize_rows);
  }();

  write_assignment_csv(out / "assignment.csv", assignment, prov);
  std::cout << "embed: wrote " << (out / "assignment.csv").string() << " ("
            << assignment.n_items() << " items x " << assignment.n_tokens()
            << " tokens, method=" << to_string(emb.method) << ")\n";
  return 0;
}

int cmd_estimate(const CommonFlags& flags, const std::string& log_path,
                 const std::string& assignment_path, const std::string& mode_name,
                 const std::string& learner_name) {
  json cfg = load_config(flags.config_path);
  EmConfig em = em_config_from_json(cfg.value("em", json::object()));
  if (!mode_name.empty()) em.mode = expand_mode_from_string(mode_name);
  if (!learner_name.empty()) em.learner.kind = learner_kind_from_string(learner_name);
  if (flags.seed) em.seed = *flags.seed;

  const InteractionLog log = read_log_csv(log_path);
  const AssignmentMatrix assignment = read_assignment_csv(assignment_path);

  const std::string hash = config_hash(to_json(em));
  const EmState state = run_em(log, assignment, em);

  const fs::path out = resolve_out(flags.out_dir);
  write_emstate_json(out / "emstate.json", state, {hash, em.seed});
  std::cout << "estimate: wrote " << (out / "emstate.json").string() << " (iterations="
            << state.iterations << ", converged=" << (state.converged ? "yes" : "no")
            << ")\n";
  return 0;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& emstate_path,
                 const std::string& truth_path, const std::string& assignment_path) {
  json cfg = load_config(flags.config_path);
  EvalConfig eval = eval_config_from_json(cfg.value("eval", json::object()));

  const EmState state = read_emstate_json(emstate_path);
  const GroundTruth truth = read_truth_json(truth_path);
  const AssignmentMatrix assignment = read_assignment_csv(assignment_path);

  const TrialMetrics metrics = evaluate_trial(state, assignment, truth, eval);
  const EvalReport report = aggregate_trials("REM", {metrics}, eval);

  const std::string hash = config_hash(to_json(eval));
  json out_json = report_to_json(report);
  out_json["config_hash"] = hash;
  out_json["seed"] = state.seed;
  out_json["relevance_labeling"] = "true relevance above per-user quantile";

  const fs::path out = resolve_out(flags.out_dir);
  write_json_file(out / "evaluation.json", out_json);
  std::cout << render_report_table({report});
  return 0;
}

int cmd_pipeline(const CommonFlags& flags, int trials_override) {
  json cfg = load_config(flags.config_path);
  PipelineConfig pipeline = pipeline_config_from_json(cfg);
  if (flags.seed) pipeline.sim.seed = *flags.seed;
  if (trials_override > 0) pipeline.eval.n_trials = trials_override;
  if (!flags.out_dir.empty()) pipeline.output_dir = flags.out_dir;
  pipeline.output_dir = resolve_out(pipeline.output_dir);

  const PipelineResult result = run_pipeline(pipeline, true);
  std::cout << result.report_table;
  std::cout << "pipeline: wrote " << (pipeline.output_dir / "report.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position bias estimation with item embeddings"};
  app.require_subcommand(1);

  CommonFlags sim_flags, emb_flags, est_flags, eval_flags, pipe_flags;

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic click log");
  add_common(sim, sim_flags);

  CLI::App* emb = app.add_subcommand("embed", "build an item-token assignment matrix");
  add_common(emb, emb_flags);
  std::string truth_path, features_path, method_name;
  int m = 0;
  double temperature = 0.0;
  bool no_standardize = false;
  emb->add_option("--truth", truth_path, "truth.json with item features");
  emb->add_option("--features", features_path, "item feature CSV");
  emb->add_option("--method", method_name, "lsi, vae or identity");
  emb->add_option("--m", m, "embedding dimension");
  emb->add_option("--temperature", temperature, "softmax temperature");
  emb->add_flag("--no-standardize", no_standardize, "skip per-row standardization");

  CLI::App* est = app.add_subcommand("estimate", "run regression EM on a log");
  add_common(est, est_flags);
  std::string log_path, assignment_path, mode_name, learner_name;
  est->add_option("--log", log_path, "interaction log CSV (--load-csv schema)")->required();
  est->add_option("--load-csv", log_path, "alias for --log: external log in the same schema");
  est->add_option("--assignment", assignment_path, "assignment CSV")->required();
  est->add_option("--mode", mode_name, "sample or expectation");
  est->add_option("--learner", learner_name, "gbdt or tabular");

  CLI::App* eval = app.add_subcommand("evaluate", "score a fitted state against truth");
  add_common(eval, eval_flags);
  std::string emstate_path, eval_truth_path, eval_assignment_path;
  eval->add_option("--emstate", emstate_path, "emstate.json")->required();
  eval->add_option("--truth", eval_truth_path, "truth.json")->required();
  eval->add_option("--assignment", eval_assignment_path, "assignment CSV")->required();

  CLI::App* pipe = app.add_subcommand("pipeline",
                                      "simulate, sparsify, estimate and compare methods");
  add_common(pipe, pipe_flags);
  int trials_override = 0;
  pipe->add_option("--trials", trials_override, "override eval.n_trials");

  std::string stage = "parse";
  try {
    app.parse(argc, argv);
    if (sim->parsed()) {
      stage = "simulate";
      return cmd_simulate(sim_flags);
    }
    if (emb->parsed()) {
      stage = "embed";
      return cmd_embed(emb_flags, truth_path, features_path, method_name, m, temperature,
                       no_standardize);
    }
    if (est->parsed()) {
      stage = "estimate";
      return cmd_estimate(est_flags, log_path, assignment_path, mode_name, learner_name);
    }
    if (eval->parsed()) {
      stage = "evaluate";
      return cmd_evaluate(eval_flags, emstate_path, eval_truth_path, eval_assignment_path);
    }
    stage = "pipeline";
    return cmd_pipeline(pipe_flags, trials_override);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << stage << ": config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << stage << ": config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << stage << ": error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
