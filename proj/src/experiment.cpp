#include "snrml/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "snrml/eval.hpp"
#include "snrml/hashing.hpp"
#include "snrml/metrics.hpp"

namespace snrml {

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

ExperimentSeeds ExperimentSeeds::derive(std::uint64_t seed) {
  return {splitmix64(seed), splitmix64(seed + 1), splitmix64(seed + 2), splitmix64(seed + 3)};
}

std::vector<Fig1Row> run_fig1_experiment(std::size_t dim, const std::vector<double>& sigma2_list,
                                         std::size_t trials, std::uint64_t seed) {
  if (dim < 2) throw Error(ErrorCategory::Parameter, "fig1: dim must be >= 2");
  if (trials < 1) throw Error(ErrorCategory::Parameter, "fig1: trials must be >= 1");
  SeededRng rng(seed);
  std::vector<Fig1Row> rows;
  Vector compared(dim);
  for (double sigma2 : sigma2_list) {
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
      throw Error(ErrorCategory::Parameter, "fig1: sigma2 must be finite and >= 0");
    }
    double sum = 0.0, sum_sq = 0.0, noise_var = 0.0, signal_var = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const Vector anchor = sample_gaussian(rng, dim, 0.0, 1.0);
      const Vector noise = sample_gaussian(rng, dim, 0.0, sigma2);
      for (std::size_t d = 0; d < dim; ++d) compared[d] = anchor[d] + noise[d];
      const double ds = snr_distance(anchor, compared, VarianceMode::ZeroMeanAssumed);
      sum += ds;
      sum_sq += ds * ds;
      noise_var += variance(noise, VarianceMode::ZeroMeanAssumed);
      signal_var += variance(anchor, VarianceMode::ZeroMeanAssumed);
    }
    const double n = static_cast<double>(trials);
    Fig1Row row;
    row.sigma2 = sigma2;
    row.mean_distance = sum / n;
    row.std_distance = std::sqrt(std::max(0.0, sum_sq / n - row.mean_distance * row.mean_distance));
    row.pooled_distance = noise_var / signal_var;
    rows.push_back(row);
  }
  return rows;
}

std::string fig1_csv(const std::vector<Fig1Row>& rows) {
  std::ostringstream out;
  out << "sigma2,mean_ds,std_ds,pooled_ds\n";
  for (const auto& r : rows) {
    out << num(r.sigma2) << ',' << num(r.mean_distance) << ',' << num(r.std_distance) << ','
        << num(r.pooled_distance) << '\n';
  }
  return out.str();
}

double EvalMetrics::recall_at(std::size_t k) const {
  for (const auto& [kk, v] : recall) {
    if (kk == k) return v;
  }
  throw Error(ErrorCategory::Parameter, "recall@" + std::to_string(k) + " was not evaluated");
}

namespace {

bool single_label(const std::vector<LabelSet>& labels) {
  return std::all_of(labels.begin(), labels.end(),
                     [](const LabelSet& l) { return l.size() == 1; });
}

std::vector<std::pair<std::size_t, double>> recalls(const std::vector<RankedRetrieval>& r,
                                                    const std::vector<std::size_t>& ks) {
  std::vector<std::pair<std::size_t, double>> out;
  const std::size_t gallery = r.front().relevant.size();
  for (std::size_t k : ks) {
    if (k >= 1 && k <= gallery) out.emplace_back(k, recall_at_k(r, k));
  }
  return out;
}

HashMetrics hash_metrics(const Matrix& test_emb, const LabeledBatch& test,
                         const Matrix* gallery_emb, const LabeledBatch* gallery,
                         const ExperimentConfig& config) {
  const auto query_codes = quantize_rows(test_emb);
  const auto gallery_codes = gallery_emb ? quantize_rows(*gallery_emb) : query_codes;
  const auto& gallery_labels = gallery ? gallery->labels : test.labels;
  std::vector<RankedRetrieval> retrievals;
  for (std::size_t q = 0; q < query_codes.size(); ++q) {
    RankedRetrieval r;
    r.query = q;
    for (std::size_t g : hamming_rank(query_codes[q], gallery_codes)) {
      if (!gallery && g == q) continue;
      r.ranking.push_back(g);
      r.relevant.push_back(similar(test.labels[q], gallery_labels[g]));
    }
    retrievals.push_back(std::move(r));
  }
  HashMetrics h;
  const std::size_t g = retrievals.front().relevant.size();
  h.map = map_at_t(retrievals, config.eval.map_t ? std::min(config.eval.map_t, g) : g);
  h.recall = recalls(retrievals, config.eval.recall_k);
  const auto spread = hamming_spread(query_codes, test.labels);
  h.intra = spread.intra;
  h.inter = spread.inter;
  return h;
}

}  // namespace

EvalMetrics evaluate_model(const MlpModel& model, const Dataset& data,
                           const ExperimentConfig& config, Matrix* test_embeddings) {
  EvalMetrics m;
  m.ranking = config.ranking_metric();
  const VarianceMode mode = config.loss.variance_mode;
  const Matrix test_emb = embed(model, data.test.embeddings);
  const LabeledBatch test{test_emb, data.test.labels};

  std::vector<RankedRetrieval> retrievals;
  Matrix train_emb;
  const bool vs_train = config.eval.protocol == EvalProtocol::TestVsTrain;
  if (vs_train) {
    train_emb = embed(model, data.train.embeddings);
    retrievals = rank_queries(test, LabeledBatch{train_emb, data.train.labels}, m.ranking, mode);
  } else {
    retrievals = rank_leave_one_out(test, m.ranking, mode);
  }
  const std::size_t gallery = retrievals.front().relevant.size();
  m.recall = recalls(retrievals, config.eval.recall_k);
  m.map_t = config.eval.map_t ? std::min(config.eval.map_t, gallery) : gallery;
  m.map = map_at_t(retrievals, m.map_t);

  if (single_label(data.test.labels)) {
    ClusteringResult clustering;
    std::set<int> classes;
    for (const auto& l : data.test.labels) {
      clustering.truth.push_back(l.front());
      classes.insert(l.front());
    }
    SeededRng rng(ExperimentSeeds::derive(config.seed).cluster);
    clustering.predicted = kmeans(test_emb, classes.size(), rng, config.eval.kmeans_iters).assignments;
    m.f1 = f1_score(clustering);
    m.nmi = nmi(clustering);
  }
  const auto spread = class_spread(test_emb, data.test.labels);
  m.intra_distance = spread.intra;
  m.inter_distance = spread.inter;

  if (config.eval.hashing) {
    const LabeledBatch train_batch{train_emb, data.train.labels};
    m.hashing = hash_metrics(test_emb, test, vs_train ? &train_emb : nullptr,
                             vs_train ? &train_batch : nullptr, config);
  }
  if (test_embeddings) *test_embeddings = test_emb;
  return m;
}

namespace {

MlpModel build_model(const ExperimentConfig& config, std::size_t input_dim, SeededRng& rng) {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(config.embedding);
  return MlpModel::initialize(sizes, rng);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto seeds = ExperimentSeeds::derive(config.seed);
  SeededRng data_rng(seeds.data), init_rng(seeds.init), train_rng(seeds.train);

  ExperimentResult result;
  result.config = config;
  result.command = "train";
  result.data = load_dataset(config.dataset, data_rng);
  result.train_size = result.data.train.size();
  result.test_size = result.data.test.size();
  result.input_dim = result.data.train.embeddings.cols();
  result.model = build_model(config, result.input_dim, init_rng);
  result.trace = train(result.model, result.data.train, config.train_config(), train_rng);
  result.metrics = evaluate_model(result.model, result.data, config, &result.test_embeddings);
  return result;
}

ExperimentResult evaluate_experiment(const ExperimentConfig& config, const MlpModel& model) {
  config.validate();
  SeededRng data_rng(ExperimentSeeds::derive(config.seed).data);
  ExperimentResult result;
  result.config = config;
  result.command = "eval";
  result.data = load_dataset(config.dataset, data_rng);
  result.train_size = result.data.train.size();
  result.test_size = result.data.test.size();
  result.input_dim = result.data.train.embeddings.cols();
  if (model.input_dim() != result.input_dim) {
    throw Error(ErrorCategory::Dimension, "eval: model input dimension does not match dataset");
  }
  result.model = model;
  result.metrics = evaluate_model(result.model, result.data, config, &result.test_embeddings);
  return result;
}

namespace {

Json recall_json(const std::vector<std::pair<std::size_t, double>>& recall) {
  Json j = Json::object();
  for (const auto& [k, v] : recall) j[std::to_string(k)] = v;
  return j;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json metrics_json(const EvalMetrics& m) {
  Json j;
  j["ranking"] = std::string(to_string(m.ranking));
  j["recall_at_k"] = recall_json(m.recall);
  j["map_t"] = m.map_t;
  j["map"] = m.map;
  j["f1"] = optional_json(m.f1);
  j["nmi"] = optional_json(m.nmi);
  j["intra_class_distance"] = m.intra_distance;
  j["inter_class_distance"] = m.inter_distance;
  j["intra_inter_ratio"] = m.spread_ratio();
  if (m.hashing) {
    Json h;
    h["bits"] = nullptr;
    h["map"] = m.hashing->map;
    h["recall_at_k"] = recall_json(m.hashing->recall);
    h["intra_class_hamming"] = m.hashing->intra;
    h["inter_class_hamming"] = m.hashing->inter;
    j["hashing"] = std::move(h);
  } else {
    j["hashing"] = nullptr;
  }
  return j;
}

Json report_json(const ExperimentResult& r) {
  Json j;
  j["format"] = "snrml-report";
  j["version"] = 1;
  j["command"] = r.command;
  j["seed"] = r.config.seed;
  const std::string text = serialize_config(r.config);
  Json cfg = Json::object();
  {
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line.front() == '[') {
        section = line.substr(1, line.size() - 2);
        cfg[section] = Json::object();
        continue;
      }
      const auto eq = line.find(" = ");
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 3);
      if (section.empty()) {
        cfg[key] = value;
      } else {
        cfg[section][key] = value;
      }
    }
  }
  j["config"] = std::move(cfg);
  j["config_text"] = text;
  j["dataset"] = {{"source", std::string(to_string(r.config.dataset.source))},
                  {"train_size", r.train_size},
                  {"test_size", r.test_size},
                  {"input_dim", r.input_dim}};
  j["model"] = {{"layer_sizes", r.model.layer_sizes()},
                {"parameters", r.model.parameter_count()}};
  j["training"] = {{"loss", std::string(to_string(r.config.loss_kind))},
                   {"metric", std::string(to_string(r.config.loss.metric))},
                   {"momentum", ExperimentConfig::kMomentum},
                   {"epochs", r.trace.epoch_loss.size()},
                   {"steps", r.trace.steps},
                   {"initial_loss", r.trace.initial_loss},
                   {"final_loss", r.trace.final_loss()},
                   {"skipped_batches", r.trace.skipped_batches},
                   {"warnings", r.trace.warnings}};
  j["metrics"] = metrics_json(r.metrics);
  if (r.metrics.hashing) j["metrics"]["hashing"]["bits"] = r.model.output_dim();
  return j;
}

void write_experiment_outputs(const ExperimentResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCategory::Data, "cannot create output directory " + out_dir);
  const fs::path dir(out_dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorCategory::Data, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("report.json");
    f << report_json(result).dump(2) << '\n';
  }
  {
    auto f = open("loss_curve.csv");
    f << "epoch,loss,train_loss\n0," << num(result.trace.initial_loss) << ",\n";
    for (std::size_t e = 0; e < result.trace.epoch_loss.size(); ++e) {
      f << e + 1 << ',' << num(result.trace.epoch_loss[e]) << ','
        << num(result.trace.epoch_train_loss[e]) << '\n';
    }
  }
  save_checkpoint(result.model, (dir / "model.ckpt").string());
  if (result.config.eval.export_embeddings) {
    auto f = open("embeddings.csv");
    write_embeddings_csv(f, result.test_embeddings, result.data.test.labels, result.data.test_ids);
  }
  if (result.config.eval.hashing) {
    auto f = open("codes.txt");
    write_codes(f, quantize_rows(result.test_embeddings), result.data.test_ids);
  }
}

std::vector<ComparisonRow> compare_metrics(const ExperimentConfig& config,
                                           const std::vector<std::uint64_t>& seeds) {
  std::vector<ComparisonRow> rows;
  for (std::uint64_t seed : seeds) {
    ExperimentConfig c = config;
    c.seed = seed;
    ComparisonRow row;
    row.seed = seed;
    c.loss.metric = MetricKind::Snr;
    row.snr = run_experiment(c).metrics;
    c.loss.metric = MetricKind::Euclidean;
    row.euclidean = run_experiment(c).metrics;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

struct Column {
  std::string name;
  std::function<std::optional<double>(const EvalMetrics&)> get;
};

std::vector<Column> comparison_columns(const std::vector<ComparisonRow>& rows) {
  std::vector<Column> cols;
  if (!rows.empty()) {
    for (const auto& [k, v] : rows.front().snr.recall) {
      const std::size_t kk = k;
      cols.push_back({"recall@" + std::to_string(k),
                      [kk](const EvalMetrics& m) -> std::optional<double> { return m.recall_at(kk); }});
    }
  }
  cols.push_back({"map", [](const EvalMetrics& m) -> std::optional<double> { return m.map; }});
  cols.push_back({"f1", [](const EvalMetrics& m) { return m.f1; }});
  cols.push_back({"nmi", [](const EvalMetrics& m) { return m.nmi; }});
  cols.push_back({"intra_inter_ratio",
                  [](const EvalMetrics& m) -> std::optional<double> { return m.spread_ratio(); }});
  return cols;
}

}  // namespace

Json comparison_json(const std::vector<ComparisonRow>& rows) {
  Json out;
  out["format"] = "snrml-comparison";
  out["version"] = 1;
  Json table = Json::array();
  std::size_t snr_no_worse = 0;
  const auto cols = comparison_columns(rows);
  for (const auto& row : rows) {
    Json r;
    r["seed"] = row.seed;
    for (const auto& col : cols) {
      const auto a = col.get(row.snr);
      const auto b = col.get(row.euclidean);
      r[col.name] = {{"snr", a ? Json(*a) : Json(nullptr)},
                     {"euclidean", b ? Json(*b) : Json(nullptr)},
                     {"delta", a && b ? Json(*a - *b) : Json(nullptr)}};
    }
    const bool no_worse = row.snr.spread_ratio() <= row.euclidean.spread_ratio();
    r["snr_ratio_no_worse"] = no_worse;
    snr_no_worse += no_worse ? 1 : 0;
    table.push_back(std::move(r));
  }
  out["rows"] = std::move(table);
  out["seeds"] = rows.size();
  out["snr_ratio_no_worse_count"] = snr_no_worse;
  return out;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  const auto cols = comparison_columns(rows);
  std::ostringstream out;
  out << "seed,metric,snr,euclidean,delta\n";
  for (const auto& row : rows) {
    for (const auto& col : cols) {
      const auto a = col.get(row.snr);
      const auto b = col.get(row.euclidean);
      out << row.seed << ',' << col.name << ',' << (a ? num(*a) : "") << ','
          << (b ? num(*b) : "") << ',' << (a && b ? num(*a - *b) : "") << '\n';
    }
  }
  return out.str();
}

}  // namespace snrml
