#include "snrml/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace snrml {

std::string_view to_string(DatasetSource source) noexcept {
  switch (source) {
    case DatasetSource::Blobs: return "blobs";
    case DatasetSource::Fig1: return "fig1";
    case DatasetSource::Csv: return "csv";
  }
  return "unknown";
}

std::string_view to_string(RankingChoice ranking) noexcept {
  switch (ranking) {
    case RankingChoice::Auto: return "auto";
    case RankingChoice::Snr: return "snr";
    case RankingChoice::Euclidean: return "euclidean";
  }
  return "unknown";
}

std::string_view to_string(EvalProtocol protocol) noexcept {
  return protocol == EvalProtocol::WithinTest ? "within_test" : "test_vs_train";
}

std::string_view to_string(VarianceMode mode) noexcept {
  return mode == VarianceMode::ZeroMeanAssumed ? "zero_mean" : "mean_subtracted";
}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCategory::Config, msg); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    config_error("expected a finite number, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    config_error("expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& s) { return static_cast<std::size_t>(parse_u64(s)); }

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  config_error("expected true or false, got '" + s + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_size(item));
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

template <typename Enum>
Enum parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, Enum>> options) {
  std::string expected;
  for (const auto& [name, value] : options) {
    if (s == name) return value;
    expected += expected.empty() ? name : std::string("|") + name;
  }
  config_error("unknown value '" + s + "' (expected " + expected + ")");
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SNRML_DOUBLE(sec, name, member)                                          \
  Field {                                                                        \
    sec, name, [](ExperimentConfig& c, const std::string& v) { c.member = parse_double(v); }, \
        [](const ExperimentConfig& c) { return format_double(c.member); }        \
  }
#define SNRML_SIZE(sec, name, member)                                            \
  Field {                                                                        \
    sec, name, [](ExperimentConfig& c, const std::string& v) { c.member = parse_size(v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }       \
  }
#define SNRML_BOOL(sec, name, member)                                            \
  Field {                                                                        \
    sec, name, [](ExperimentConfig& c, const std::string& v) { c.member = parse_bool(v); }, \
        [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"loss", "kind",
       [](ExperimentConfig& c, const std::string& v) {
         c.loss_kind = parse_enum<LossKind>(v, {{"contrastive", LossKind::Contrastive},
                                                {"triplet", LossKind::Triplet},
                                                {"lifted", LossKind::Lifted},
                                                {"npair", LossKind::Npair}});
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.loss_kind)); }},
      {"loss", "metric",
       [](ExperimentConfig& c, const std::string& v) {
         c.loss.metric = parse_enum<MetricKind>(
             v, {{"snr", MetricKind::Snr}, {"euclidean", MetricKind::Euclidean}});
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.loss.metric)); }},
      SNRML_DOUBLE("loss", "margin", loss.margin),
      SNRML_DOUBLE("loss", "lifted_scale", loss.lifted_scale),
      SNRML_DOUBLE("loss", "lambda", loss.regularizer_weight),
      {"loss", "variance_mode",
       [](ExperimentConfig& c, const std::string& v) {
         c.loss.variance_mode = parse_enum<VarianceMode>(
             v, {{"zero_mean", VarianceMode::ZeroMeanAssumed},
                 {"mean_subtracted", VarianceMode::MeanSubtracted}});
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.loss.variance_mode)); }},
      SNRML_BOOL("loss", "ordered_pairs", loss.ordered_pairs),
      {"loss", "triplet_averaging",
       [](ExperimentConfig& c, const std::string& v) {
         c.loss.triplet_averaging = parse_enum<TripletAveraging>(
             v, {{"all", TripletAveraging::AllValid}, {"active", TripletAveraging::ActiveOnly}});
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.loss.triplet_averaging)); }},
      SNRML_DOUBLE("loss", "similarity_cap", loss.similarity_cap),

      {"model", "hidden",
       [](ExperimentConfig& c, const std::string& v) { c.hidden = parse_size_list(v); },
       [](const ExperimentConfig& c) { return join(c.hidden); }},
      SNRML_SIZE("model", "embedding", embedding),

      SNRML_DOUBLE("train", "learning_rate", learning_rate),
      SNRML_SIZE("train", "batch_size", batch_size),
      SNRML_SIZE("train", "epochs", epochs),
      {"train", "seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_u64(v); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},

      {"dataset", "source",
       [](ExperimentConfig& c, const std::string& v) {
         c.dataset.source = parse_enum<DatasetSource>(v, {{"blobs", DatasetSource::Blobs},
                                                          {"fig1", DatasetSource::Fig1},
                                                          {"csv", DatasetSource::Csv}});
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.dataset.source)); }},
      SNRML_SIZE("dataset", "classes", dataset.classes),
      SNRML_SIZE("dataset", "dim", dataset.dim),
      SNRML_SIZE("dataset", "train_per_class", dataset.train_per_class),
      SNRML_SIZE("dataset", "test_per_class", dataset.test_per_class),
      SNRML_DOUBLE("dataset", "separation", dataset.separation),
      SNRML_DOUBLE("dataset", "noise", dataset.noise),
      SNRML_DOUBLE("dataset", "sigma2", dataset.sigma2),
      {"dataset", "path", [](ExperimentConfig& c, const std::string& v) { c.dataset.path = v; },
       [](const ExperimentConfig& c) { return c.dataset.path; }},
      {"dataset", "label_column",
       [](ExperimentConfig& c, const std::string& v) { c.dataset.label_column = v; },
       [](const ExperimentConfig& c) { return c.dataset.label_column; }},
      SNRML_BOOL("dataset", "multi_label", dataset.multi_label),
      SNRML_DOUBLE("dataset", "train_fraction", dataset.train_fraction),

      {"eval", "recall_k",
       [](ExperimentConfig& c, const std::string& v) { c.eval.recall_k = parse_size_list(v); },
       [](const ExperimentConfig& c) { return join(c.eval.recall_k); }},
      SNRML_SIZE("eval", "map_t", eval.map_t),
      {"eval", "ranking",
       [](ExperimentConfig& c, const std::string& v) {
         c.eval.ranking = parse_enum<RankingChoice>(v, {{"auto", RankingChoice::Auto},
                                                        {"snr", RankingChoice::Snr},
                                                        {"euclidean", RankingChoice::Euclidean}});
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.eval.ranking)); }},
      {"eval", "protocol",
       [](ExperimentConfig& c, const std::string& v) {
         c.eval.protocol = parse_enum<EvalProtocol>(
             v, {{"within_test", EvalProtocol::WithinTest},
                 {"test_vs_train", EvalProtocol::TestVsTrain}});
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.eval.protocol)); }},
      SNRML_BOOL("eval", "hashing", eval.hashing),
      SNRML_SIZE("eval", "kmeans_iters", eval.kmeans_iters),
      SNRML_BOOL("eval", "export_embeddings", eval.export_embeddings),
  };
  return table;
}

#undef SNRML_DOUBLE
#undef SNRML_SIZE
#undef SNRML_BOOL

}  // namespace

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& key, const std::string& why) {
    config_error("config: " + key + " " + why);
  };
  try {
    loss.validate();
  } catch (const Error& e) {
    config_error(std::string("config: [loss] ") + e.what());
  }
  if (embedding < 1) bad("model.embedding", "must be >= 1");
  for (std::size_t h : hidden) {
    if (h < 1) bad("model.hidden", "entries must be >= 1");
  }
  if (!(learning_rate >= 0.0)) bad("train.learning_rate", "must be >= 0");
  if (batch_size < 2) bad("train.batch_size", "must be >= 2");
  if (loss_kind == LossKind::Npair && batch_size < 4) bad("train.batch_size", "must be >= 4 for npair");
  if (dataset.source != DatasetSource::Csv) {
    if (dataset.classes < 2) bad("dataset.classes", "must be >= 2");
    if (dataset.dim < 1) bad("dataset.dim", "must be >= 1");
    if (dataset.train_per_class < 2) bad("dataset.train_per_class", "must be >= 2");
    if (dataset.test_per_class < 2) bad("dataset.test_per_class", "must be >= 2");
  } else if (dataset.path.empty()) {
    bad("dataset.path", "is required for csv sources");
  }
  if (!(dataset.separation >= 0.0)) bad("dataset.separation", "must be >= 0");
  if (!(dataset.noise >= 0.0)) bad("dataset.noise", "must be >= 0");
  if (!(dataset.sigma2 >= 0.0)) bad("dataset.sigma2", "must be >= 0");
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) {
    bad("dataset.train_fraction", "must lie in (0, 1)");
  }
  if (loss_kind == LossKind::Npair && dataset.multi_label) {
    bad("loss.kind", "npair requires single-label data");
  }
  for (std::size_t k : eval.recall_k) {
    if (k < 1) bad("eval.recall_k", "entries must be >= 1");
  }
  if (eval.kmeans_iters < 1) bad("eval.kmeans_iters", "must be >= 1");
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.loss_kind = loss_kind;
  t.loss = loss;
  t.learning_rate = learning_rate;
  t.momentum = kMomentum;
  t.batch_size = batch_size;
  t.epochs = epochs;
  return t;
}

MetricKind ExperimentConfig::ranking_metric() const {
  switch (eval.ranking) {
    case RankingChoice::Snr: return MetricKind::Snr;
    case RankingChoice::Euclidean: return MetricKind::Euclidean;
    case RankingChoice::Auto: break;
  }
  return loss.metric;
}

ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, const Field*> lookup;
  for (const auto& f : fields()) lookup[std::string(f.section) + "." + f.key] = &f;

  ExperimentConfig cfg;
  std::string section;
  std::string line;
  std::set<std::string> seen;
  bool have_version = false;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty() && key == "version") {
      try {
        if (parse_u64(value) != ExperimentConfig::kFormatVersion) {
          config_error("unsupported config version " + value);
        }
      } catch (const Error& e) {
        config_error(where + e.what());
      }
      have_version = true;
      continue;
    }
    const std::string full = section + "." + key;
    auto it = lookup.find(full);
    if (it == lookup.end()) config_error(where + "unknown key '" + full + "'");
    if (!seen.insert(full).second) config_error(where + "duplicate key '" + full + "'");
    try {
      it->second->set(cfg, value);
    } catch (const Error& e) {
      config_error(where + full + ": " + e.what());
    }
  }
  if (!have_version) config_error("config: missing 'version = 1' line");
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file " + path);
  return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "version = " << ExperimentConfig::kFormatVersion << '\n';
  std::string section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      section = f.section;
      out << "\n[" << section << "]\n";
    }
    out << f.key << " = " << f.get(config) << '\n';
  }
  return out.str();
}

}  // namespace snrml
