#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "snrml/error.hpp"
#include "snrml/experiment.hpp"

using namespace snrml;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.dataset.classes = 3;
  c.dataset.dim = 6;
  c.dataset.train_per_class = 8;
  c.dataset.test_per_class = 5;
  c.dataset.separation = 3.0;
  c.hidden = {8};
  c.embedding = 4;
  c.batch_size = 12;
  c.epochs = 3;
  c.learning_rate = 1e-2;
  c.eval.recall_k = {1, 2};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("fig1 experiment") {
  const auto zero = run_fig1_experiment(32, {0.0}, 100, 1);
  CHECK(zero[0].mean_distance == 0.0);
  CHECK(zero[0].std_distance == 0.0);

  // Per-trial mean follows sigma2 * dim / (dim - 2); the pooled ratio follows sigma2.
  const auto rows = run_fig1_experiment(32, {0.5, 2.0}, 4000, 7);
  for (const auto& r : rows) {
    const double se = r.std_distance / std::sqrt(4000.0);
    CHECK(std::abs(r.mean_distance - r.sigma2 * 32.0 / 30.0) < 4 * se);
    CHECK(r.pooled_distance == doctest::Approx(r.sigma2).epsilon(0.02));
  }
  double prev = 1e9;
  for (std::size_t dim : {16u, 32u, 64u, 128u}) {
    const double s = run_fig1_experiment(dim, {1.0}, 2000, 3)[0].std_distance;
    CHECK(s < prev);
    prev = s;
  }
  CHECK(run_fig1_experiment(32, {1.0}, 50, 9)[0].mean_distance ==
        run_fig1_experiment(32, {1.0}, 50, 9)[0].mean_distance);
  CHECK(fig1_csv(rows).rfind("sigma2,mean_ds,std_ds,pooled_ds\n", 0) == 0);
  CHECK_THROWS_AS(run_fig1_experiment(1, {1.0}, 10, 1), Error);
  CHECK_THROWS_AS(run_fig1_experiment(8, {-1.0}, 10, 1), Error);
  CHECK_THROWS_AS(run_fig1_experiment(8, {1.0}, 0, 1), Error);
}

TEST_CASE("zero epochs evaluates the initial model") {
  auto c = small_config();
  c.epochs = 0;
  const auto r = run_experiment(c);
  CHECK(r.trace.epoch_loss.empty());
  CHECK(r.trace.steps == 0);
  CHECK(r.test_size == 15);
  CHECK(r.train_size == 24);
  CHECK(r.metrics.recall.size() == 2);
  CHECK(r.metrics.f1.has_value());
  CHECK(r.metrics.map > 0.0);
}

TEST_CASE("reruns are byte-identical and the report echoes the config") {
  auto c = small_config();
  c.eval.hashing = true;
  for (auto kind : {LossKind::Contrastive, LossKind::Triplet, LossKind::Lifted, LossKind::Npair}) {
    c.loss_kind = kind;
    const auto a = run_experiment(c), b = run_experiment(c);
    CHECK(metrics_json(a.metrics).dump() == metrics_json(b.metrics).dump());
    CHECK(a.model == b.model);
    const Json rep = report_json(a);
    CHECK(parse_config_string(rep["config_text"].get<std::string>()) == c);
    CHECK(rep["metrics"]["hashing"]["bits"] == c.embedding);
    CHECK(rep["training"]["epochs"] == c.epochs);
  }
  c.loss_kind = LossKind::Triplet;
  auto other = c;
  other.seed = 2;
  CHECK(metrics_json(run_experiment(c).metrics).dump() !=
        metrics_json(run_experiment(other).metrics).dump());
}

TEST_CASE("outputs on disk and evaluation of a saved model") {
  auto c = small_config();
  c.eval.hashing = true;
  c.eval.export_embeddings = true;
  const auto dir = std::filesystem::temp_directory_path() / "snrml_experiment_test";
  std::filesystem::remove_all(dir);
  const auto r = run_experiment(c);
  write_experiment_outputs(r, dir.string());
  for (const char* f : {"report.json", "loss_curve.csv", "model.ckpt", "embeddings.csv", "codes.txt"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const std::string curve = slurp(dir / "loss_curve.csv");
  CHECK(curve.rfind("epoch,loss,train_loss\n0,", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 1 + 1 + static_cast<long>(c.epochs));
  const Json rep = Json::parse(slurp(dir / "report.json"));
  CHECK(rep["format"] == "snrml-report");

  const auto again = evaluate_experiment(c, r.model);
  CHECK(metrics_json(again.metrics).dump() == metrics_json(r.metrics).dump());
  MlpModel wrong(std::vector<std::size_t>{c.dataset.dim + 1, 4});
  CHECK_THROWS_AS(evaluate_experiment(c, wrong), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("test-vs-train protocol and metric overrides") {
  auto c = small_config();
  c.eval.protocol = EvalProtocol::TestVsTrain;
  c.eval.recall_k = {1, 100};
  const auto r = run_experiment(c);
  // K beyond the gallery is left out rather than reported.
  CHECK(r.metrics.recall.size() == 1);
  CHECK_THROWS_AS(r.metrics.recall_at(100), Error);
  CHECK(r.metrics.map_t == 24);
  c.eval.ranking = RankingChoice::Euclidean;
  CHECK(run_experiment(c).metrics.ranking == MetricKind::Euclidean);
}

TEST_CASE("comparison across seeds") {
  auto c = small_config();
  c.loss_kind = LossKind::Contrastive;
  const auto rows = compare_metrics(c, {1, 2});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].snr.ranking == MetricKind::Snr);
  CHECK(rows[0].euclidean.ranking == MetricKind::Euclidean);
  const Json j = comparison_json(rows);
  CHECK(j["seeds"] == 2);
  CHECK(j["rows"].size() == 2);
  CHECK(j["snr_ratio_no_worse_count"].get<int>() >= 0);
  const std::string csv = comparison_csv(rows);
  CHECK(csv.rfind("seed,metric,snr,euclidean,delta\n", 0) == 0);

  auto single = c;
  single.seed = 2;
  single.loss.metric = MetricKind::Euclidean;
  CHECK(metrics_json(run_experiment(single).metrics).dump() == metrics_json(rows[1].euclidean).dump());
}
