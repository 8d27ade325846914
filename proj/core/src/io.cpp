#include "posbias/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace posbias {

namespace {

// Shortest-exact decimal for doubles; %.17g survives a round trip.
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string prov_comment(const Provenance& prov) {
  return "# config_hash=" + prov.config_hash + " seed=" + std::to_string(prov.seed) + "\n";
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return in;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw std::invalid_argument("matrix json: ragged rows");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> vector_to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd vector_from_std(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

}  // namespace

std::string config_hash(const nlohmann::json& config) {
  const std::string canon = config.dump();  // object keys already sorted
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

nlohmann::json to_json(const SimConfig& c) {
  return {{"n_items", c.n_items},
          {"n_positions", c.n_positions},
          {"n_users", c.n_users},
          {"d_features", c.d_features},
          {"bias_curve",
           {{"name", c.bias_curve.name}, {"rate", c.bias_curve.rate},
            {"values", c.bias_curve.values}}},
          {"policy_kind", to_string(c.policy_kind)},
          {"policy_skew", c.policy_skew},
          {"seed", c.seed},
          {"n_impressions", c.n_impressions},
          {"n_user_segments", c.n_user_segments},
          {"n_item_clusters", c.n_item_clusters},
          {"d_item_features", c.d_item_features},
          {"mu_low", c.mu_low},
          {"mu_high", c.mu_high},
          {"mu_jitter", c.mu_jitter},
          {"feature_noise", c.feature_noise},
          {"context_noise", c.context_noise},
          {"anchor_popular_cluster", c.anchor_popular_cluster}};
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  c.n_items = j.value("n_items", c.n_items);
  c.n_positions = j.value("n_positions", c.n_positions);
  c.n_users = j.value("n_users", c.n_users);
  c.d_features = j.value("d_features", c.d_features);
  if (j.contains("bias_curve")) {
    const auto& b = j.at("bias_curve");
    c.bias_curve.name = b.value("name", c.bias_curve.name);
    c.bias_curve.rate = b.value("rate", c.bias_curve.rate);
    c.bias_curve.values = b.value("values", c.bias_curve.values);
  }
  c.policy_kind = policy_kind_from_string(j.value("policy_kind", to_string(c.policy_kind)));
  c.policy_skew = j.value("policy_skew", c.policy_skew);
  c.seed = j.value("seed", c.seed);
  c.n_impressions = j.value("n_impressions", c.n_impressions);
  c.n_user_segments = j.value("n_user_segments", c.n_user_segments);
  c.n_item_clusters = j.value("n_item_clusters", c.n_item_clusters);
  c.d_item_features = j.value("d_item_features", c.d_item_features);
  c.mu_low = j.value("mu_low", c.mu_low);
  c.mu_high = j.value("mu_high", c.mu_high);
  c.mu_jitter = j.value("mu_jitter", c.mu_jitter);
  c.feature_noise = j.value("feature_noise", c.feature_noise);
  c.context_noise = j.value("context_noise", c.context_noise);
  c.anchor_popular_cluster = j.value("anchor_popular_cluster", c.anchor_popular_cluster);
  c.validate();
  return c;
}

nlohmann::json to_json(const gbdt::GbdtConfig& c) {
  return {{"n_trees", c.n_trees},
          {"max_depth", c.max_depth},
          {"learning_rate", c.learning_rate},
          {"min_samples_leaf", c.min_samples_leaf},
          {"seed", c.seed}};
}

gbdt::GbdtConfig gbdt_config_from_json(const nlohmann::json& j) {
  gbdt::GbdtConfig c;
  c.n_trees = j.value("n_trees", c.n_trees);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json to_json(const EmConfig& c) {
  nlohmann::json j{{"max_iter", c.max_iter},
                   {"tol", c.tol},
                   {"mode", to_string(c.mode)},
                   {"learner", {{"kind", to_string(c.learner.kind)},
                                {"gbdt", to_json(c.learner.gbdt)}}},
                   {"seed", c.seed},
                   {"resample_rewards_each_iter", c.resample_rewards_each_iter}};
  if (c.initial_theta) j["initial_theta"] = vector_to_std(*c.initial_theta);
  return j;
}

EmConfig em_config_from_json(const nlohmann::json& j) {
  EmConfig c;
  c.max_iter = j.value("max_iter", c.max_iter);
  c.tol = j.value("tol", c.tol);
  c.mode = expand_mode_from_string(j.value("mode", to_string(c.mode)));
  if (j.contains("learner")) {
    const auto& l = j.at("learner");
    c.learner.kind = learner_kind_from_string(l.value("kind", to_string(c.learner.kind)));
    if (l.contains("gbdt")) c.learner.gbdt = gbdt_config_from_json(l.at("gbdt"));
  }
  c.seed = j.value("seed", c.seed);
  c.resample_rewards_each_iter =
      j.value("resample_rewards_each_iter", c.resample_rewards_each_iter);
  if (j.contains("initial_theta"))
    c.initial_theta = vector_from_std(j.at("initial_theta").get<std::vector<double>>());
  c.validate();
  return c;
}

nlohmann::json to_json(const EvalConfig& c) {
  return {{"cutoffs", c.cutoffs},
          {"n_trials", c.n_trials},
          {"normalize", c.normalize},
          {"relevance_quantile", c.relevance_quantile}};
}

EvalConfig eval_config_from_json(const nlohmann::json& j) {
  EvalConfig c;
  c.cutoffs = j.value("cutoffs", c.cutoffs);
  c.n_trials = j.value("n_trials", c.n_trials);
  c.normalize = j.value("normalize", c.normalize);
  c.relevance_quantile = j.value("relevance_quantile", c.relevance_quantile);
  c.validate();
  return c;
}

void write_log_csv(const std::filesystem::path& path, const InteractionLog& log,
                   const Provenance& prov) {
  std::ofstream out = open_out(path);
  out << prov_comment(prov);
  out << "# n_items=" << log.n_items() << " n_positions=" << log.n_positions() << "\n";
  for (int j = 0; j < log.context_dim(); ++j) out << "u" << j << ",";
  out << "item_id,click,position\n";
  for (std::size_t r = 0; r < log.size(); ++r) {
    const auto ctx = log.context(r);
    for (int j = 0; j < log.context_dim(); ++j) out << fmt_double(ctx[j]) << ",";
    out << log.item(r) << "," << log.click(r) << "," << log.position(r) << "\n";
  }
}

InteractionLog read_log_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  int n_items = -1, n_positions = -1;
  std::vector<std::vector<double>> ctx_rows;
  std::vector<int> items, clicks, positions;
  bool header_seen = false;
  int d = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t p = line.find("n_items=");
      if (p != std::string::npos) n_items = std::stoi(line.substr(p + 8));
      p = line.find("n_positions=");
      if (p != std::string::npos) n_positions = std::stoi(line.substr(p + 12));
      continue;
    }
    const std::vector<std::string> cells = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (cells.size() < 3 || cells[cells.size() - 3] != "item_id" ||
          cells[cells.size() - 2] != "click" || cells.back() != "position")
        throw std::invalid_argument(
            "log csv: header must end with item_id,click,position");
      d = static_cast<int>(cells.size()) - 3;
      continue;
    }
    if (static_cast<int>(cells.size()) != d + 3)
      throw std::invalid_argument("log csv: wrong column count in row");
    std::vector<double> ctx(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) ctx[static_cast<std::size_t>(j)] = std::stod(cells[j]);
    ctx_rows.push_back(std::move(ctx));
    items.push_back(std::stoi(cells[static_cast<std::size_t>(d)]));
    clicks.push_back(std::stoi(cells[static_cast<std::size_t>(d) + 1]));
    positions.push_back(std::stoi(cells[static_cast<std::size_t>(d) + 2]));
  }
  if (!header_seen) throw std::invalid_argument("log csv: missing header");
  if (items.empty()) throw std::invalid_argument("log csv: no records");

  // Catalog bounds: take the stamp when present, otherwise infer from data.
  int max_item = 0, max_pos = 0;
  for (const int i : items) max_item = std::max(max_item, i);
  for (const int k : positions) max_pos = std::max(max_pos, k);
  if (n_items < 0) n_items = max_item + 1;
  if (n_positions < 0) n_positions = max_pos + 1;

  InteractionLog log(n_items, n_positions, d);
  log.reserve(items.size());
  Interaction rec;
  for (std::size_t r = 0; r < items.size(); ++r) {
    rec.context = vector_from_std(ctx_rows[r]);
    rec.item_id = items[r];
    rec.click = clicks[r];
    rec.position = positions[r];
    log.append(rec);
  }
  return log;
}

void write_truth_json(const std::filesystem::path& path, const GroundTruth& truth,
                      const Provenance& prov) {
  nlohmann::json j{{"config_hash", prov.config_hash},
                   {"seed", prov.seed},
                   {"theta", vector_to_std(truth.theta.values())},
                   {"mu", matrix_to_json(truth.mu.values())},
                   {"item_features", matrix_to_json(truth.item_features)},
                   {"user_contexts", matrix_to_json(truth.user_contexts)},
                   {"user_segments", truth.user_segments},
                   {"item_clusters", truth.item_clusters}};
  write_json_file(path, j);
}

GroundTruth read_truth_json(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path);
  GroundTruth truth;
  truth.theta = PositionBiasVector(vector_from_std(j.at("theta").get<std::vector<double>>()));
  truth.mu = RelevanceTable(matrix_from_json(j.at("mu")));
  truth.item_features = matrix_from_json(j.at("item_features"));
  truth.user_contexts = matrix_from_json(j.at("user_contexts"));
  truth.user_segments = j.at("user_segments").get<std::vector<int>>();
  truth.item_clusters = j.value("item_clusters", std::vector<int>{});
  return truth;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& mat,
                      const Provenance& prov) {
  std::ofstream out = open_out(path);
  out << prov_comment(prov);
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    for (Eigen::Index k = 0; k < mat.cols(); ++k) {
      if (k) out << ",";
      out << fmt_double(mat(i, k));
    }
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> cells = split_csv_line(line);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& cell : cells) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("matrix csv: no rows in " + path.string());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw std::invalid_argument("matrix csv: ragged rows in " + path.string());
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

void write_assignment_csv(const std::filesystem::path& path, const AssignmentMatrix& a,
                          const Provenance& prov) {
  write_matrix_csv(path, a.values(), prov);
}

AssignmentMatrix read_assignment_csv(const std::filesystem::path& path) {
  return AssignmentMatrix(read_matrix_csv(path));
}

void write_emstate_json(const std::filesystem::path& path, const EmState& state,
                        const Provenance& prov) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& t : state.theta_history) history.push_back(vector_to_std(t));
  nlohmann::json j{{"config_hash", prov.config_hash},
                   {"seed", prov.seed},
                   {"theta", vector_to_std(state.theta.values())},
                   {"theta_history", std::move(history)},
                   {"iterations", state.iterations},
                   {"converged", state.converged},
                   {"mode", to_string(state.mode)},
                   {"n_tokens", state.n_tokens},
                   {"learner", {{"kind", to_string(state.learner.kind)},
                                {"gbdt", to_json(state.learner.gbdt)}}},
                   {"relevance_model",
                    state.relevance ? state.relevance->to_json() : nlohmann::json()}};
  write_json_file(path, j);
}

EmState read_emstate_json(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path);
  EmState state;
  state.theta = PositionBiasVector(vector_from_std(j.at("theta").get<std::vector<double>>()));
  for (const auto& t : j.at("theta_history"))
    state.theta_history.push_back(vector_from_std(t.get<std::vector<double>>()));
  state.iterations = j.at("iterations").get<int>();
  state.converged = j.at("converged").get<bool>();
  state.mode = expand_mode_from_string(j.value("mode", "sample"));
  state.n_tokens = j.value("n_tokens", 0);
  state.seed = j.value("seed", std::uint64_t{0});
  const auto& l = j.at("learner");
  state.learner.kind = learner_kind_from_string(l.at("kind").get<std::string>());
  if (l.contains("gbdt")) state.learner.gbdt = gbdt_config_from_json(l.at("gbdt"));
  if (j.contains("relevance_model") && !j.at("relevance_model").is_null())
    state.relevance = relevance_model_from_json(j.at("relevance_model"));
  return state;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialMetrics& t : report.per_trial) {
    nlohmann::json maps;
    for (const auto& [k, v] : t.map_at) maps[std::to_string(k)] = v;
    trials.push_back({{"rmse_raw", t.rmse_raw},
                      {"rmse_normalized", t.rmse_normalized},
                      {"mrr", t.mrr},
                      {"map_at", std::move(maps)}});
  }
  nlohmann::json maps;
  for (const auto& [k, v] : report.map_at)
    maps[std::to_string(k)] = {{"mean", v.mean}, {"stddev", v.stddev}};
  return {{"method", report.method},
          {"n_trials", report.n_trials},
          {"rmse_raw", {{"mean", report.rmse_raw.mean}, {"stddev", report.rmse_raw.stddev}}},
          {"rmse_normalized",
           {{"mean", report.rmse_normalized.mean}, {"stddev", report.rmse_normalized.stddev}}},
          {"mrr", {{"mean", report.mrr.mean}, {"stddev", report.mrr.stddev}}},
          {"map_at", std::move(maps)},
          {"per_trial", std::move(trials)}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport report;
  report.method = j.at("method").get<std::string>();
  report.n_trials = j.at("n_trials").get<int>();
  auto summary = [](const nlohmann::json& s) {
    return MetricSummary{s.at("mean").get<double>(), s.at("stddev").get<double>()};
  };
  report.rmse_raw = summary(j.at("rmse_raw"));
  report.rmse_normalized = summary(j.at("rmse_normalized"));
  report.mrr = summary(j.at("mrr"));
  for (const auto& [k, v] : j.at("map_at").items())
    report.map_at[std::stoi(k)] = summary(v);
  for (const auto& t : j.at("per_trial")) {
    TrialMetrics m;
    m.rmse_raw = t.at("rmse_raw").get<double>();
    m.rmse_normalized = t.at("rmse_normalized").get<double>();
    m.mrr = t.at("mrr").get<double>();
    for (const auto& [k, v] : t.at("map_at").items())
      m.map_at[std::stoi(k)] = v.get<double>();
    report.per_trial.push_back(std::move(m));
  }
  return report;
}

std::string render_report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  char buf[64];
  auto pm = [&](const MetricSummary& s) {
    std::snprintf(buf, sizeof(buf), "%.3f +- %.4f", s.mean, s.stddev);
    return std::string(buf);
  };
  std::vector<int> cutoffs;
  if (!reports.empty())
    for (const auto& [k, _] : reports.front().map_at) cutoffs.push_back(k);

  out << "method          rmse(theta)        rmse(norm)         mrr     ";
  for (int k : cutoffs) out << "  map@" << k << (k < 10 ? " " : "");
  out << "\n";
  for (const EvalReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-15s ", r.method.c_str());
    out << buf << pm(r.rmse_raw) << "  " << pm(r.rmse_normalized) << "  ";
    std::snprintf(buf, sizeof(buf), "%.4f  ", r.mrr.mean);
    out << buf;
    for (int k : cutoffs) {
      std::snprintf(buf, sizeof(buf), "%.4f ", r.map_at.at(k).mean);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out = open_out(path);
  out << content;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  nlohmann::json j;
  in >> j;
  return j;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace posbias
