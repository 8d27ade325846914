#include "posbias/pipeline.hpp"

#include "posbias/rng.hpp"

#include <stdexcept>

namespace posbias {

void EmbeddingConfig::validate() const {
  if (m < 1) throw std::invalid_argument("embedding config: m must be >= 1");
  if (!(temperature > 0.0))
    throw std::invalid_argument("embedding config: temperature must be positive");
  vae.validate();
}

nlohmann::json to_json(const EmbeddingConfig& c) {
  return {{"method", to_string(c.method)},
          {"m", c.m},
          {"temperature", c.temperature},
          {"standardize_rows", c.standardize_rows},
          {"vae",
           {{"hidden", c.vae.hidden},
            {"epochs", c.vae.epochs},
            {"learning_rate", c.vae.learning_rate},
            {"momentum", c.vae.momentum},
            {"seed", c.vae.seed}}}};
}

EmbeddingConfig embedding_config_from_json(const nlohmann::json& j) {
  EmbeddingConfig c;
  c.method = embed_method_from_string(j.value("method", to_string(c.method)));
  c.m = j.value("m", c.m);
  c.temperature = j.value("temperature", c.temperature);
  c.standardize_rows = j.value("standardize_rows", c.standardize_rows);
  if (j.contains("vae")) {
    const auto& v = j.at("vae");
    c.vae.hidden = v.value("hidden", c.vae.hidden);
    c.vae.epochs = v.value("epochs", c.vae.epochs);
    c.vae.learning_rate = v.value("learning_rate", c.vae.learning_rate);
    c.vae.momentum = v.value("momentum", c.vae.momentum);
    c.vae.seed = v.value("seed", c.vae.seed);
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (const EmbedMethod m : c.methods) methods.push_back(to_string(m));
  return {{"sim", to_json(c.sim)},
          {"embedding", to_json(c.embedding)},
          {"em", to_json(c.em)},
          {"eval", to_json(c.eval)},
          {"output_dir", c.output_dir.string()},
          {"methods", std::move(methods)}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("sim")) c.sim = sim_config_from_json(j.at("sim"));
  if (j.contains("embedding")) c.embedding = embedding_config_from_json(j.at("embedding"));
  if (j.contains("em")) c.em = em_config_from_json(j.at("em"));
  if (j.contains("eval")) c.eval = eval_config_from_json(j.at("eval"));
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& name : j.at("methods"))
      c.methods.push_back(embed_method_from_string(name.get<std::string>()));
    if (c.methods.empty())
      throw std::invalid_argument("pipeline config: methods list is empty");
  }
  return c;
}

AssignmentMatrix build_assignment(const GroundTruth& truth, const EmbeddingConfig& config,
                                  std::uint64_t seed) {
  config.validate();
  switch (config.method) {
    case EmbedMethod::identity:
      return identity_assignment(truth.mu.n_items());
    case EmbedMethod::lsi: {
      const LsiModel lsi = lsi_embed(truth.item_features, config.m);
      return to_assignment(lsi.embedding, config.temperature, config.standardize_rows);
    }
    case EmbedMethod::vae: {
      VaeConfig vc = config.vae;
      vc.seed = seed;
      const EmbeddingMatrix emb = vae_embed(truth.item_features, config.m, vc);
      return to_assignment(emb, config.temperature, config.standardize_rows);
    }
  }
  throw std::invalid_argument("build_assignment: unknown method");
}

std::string method_label(EmbedMethod method) {
  switch (method) {
    case EmbedMethod::identity: return "REM";
    case EmbedMethod::vae: return "VAE + REM";
    case EmbedMethod::lsi: return "LSI + REM";
  }
  return "REM";
}

PipelineResult run_pipeline(const PipelineConfig& config, bool write_artifacts) {
  config.eval.validate();
  const nlohmann::json config_json = to_json(config);
  const std::string hash = config_hash(config_json);

  std::vector<std::vector<TrialMetrics>> trials(config.methods.size());
  for (int t = 0; t < config.eval.n_trials; ++t) {
    SimConfig sim = config.sim;
    sim.seed = mix_seed(config.sim.seed, static_cast<std::uint64_t>(t));

    const GroundTruth truth = make_ground_truth(sim);
    SimConfig uniform_sim = sim;
    uniform_sim.policy_kind = PolicyKind::uniform;
    const LoggingPolicy uniform_policy = make_policy(uniform_sim);
    const InteractionLog dense_log = simulate_log(truth, uniform_policy, uniform_sim);

    SimConfig pinned_sim = sim;
    pinned_sim.policy_kind = PolicyKind::pinned;
    const LoggingPolicy pinned_policy = make_policy(pinned_sim);
    const InteractionLog sparse_log = sparsify(dense_log, pinned_policy);

    const std::filesystem::path trial_dir =
        config.output_dir / ("trial" + std::to_string(t));
    const Provenance prov{hash, sim.seed};
    if (write_artifacts) {
      write_log_csv(trial_dir / "log.csv", sparse_log, prov);
      write_truth_json(trial_dir / "truth.json", truth, prov);
    }

    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      EmbeddingConfig emb = config.embedding;
      emb.method = config.methods[mi];
      const AssignmentMatrix assignment = build_assignment(truth, emb, sim.seed);

      EmConfig em = config.em;
      em.seed = mix_seed(config.em.seed, mix_seed(static_cast<std::uint64_t>(t),
                                                  static_cast<std::uint64_t>(mi)));
      const EmState state = run_em(sparse_log, assignment, em);
      trials[mi].push_back(evaluate_trial(state, assignment, truth, config.eval));

      if (write_artifacts) {
        const std::filesystem::path mdir = trial_dir / to_string(config.methods[mi]);
        write_assignment_csv(mdir / "assignment.csv", assignment, prov);
        write_emstate_json(mdir / "emstate.json", state, {hash, em.seed});
      }
    }
  }

  PipelineResult result;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    EvalReport report =
        aggregate_trials(method_label(config.methods[mi]), trials[mi], config.eval);
    rows.push_back(report_to_json(report));
    result.reports.push_back(std::move(report));
  }
  result.report_json = {{"config_hash", hash},
                        {"seed", config.sim.seed},
                        {"config", config_json},
                        {"reports", std::move(rows)}};
  result.report_table = render_report_table(result.reports);
  if (write_artifacts) {
    write_json_file(config.output_dir / "report.json", result.report_json);
    write_text_file(config.output_dir / "report.txt", result.report_table);
  }
  return result;
}

}  // namespace posbias
