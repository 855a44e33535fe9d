#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "snrml/error.hpp"
#include "snrml/gradcheck.hpp"
#include "snrml/model.hpp"

using namespace snrml;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, SeededRng& rng) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

Matrix naive_forward(const MlpModel& model, const Matrix& x) {
  Matrix cur = x;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    Matrix next(cur.rows(), w.rows());
    for (std::size_t n = 0; n < cur.rows(); ++n) {
      for (std::size_t o = 0; o < w.rows(); ++o) {
        double s = layers[l].bias[o];
        for (std::size_t i = 0; i < w.cols(); ++i) s += w(o, i) * cur(n, i);
        next(n, o) = (l + 1 < layers.size() && s < 0.0) ? 0.0 : s;
      }
    }
    cur = next;
  }
  return cur;
}

// Flattened parameters so one central-difference loop covers all of them.
std::vector<double*> parameter_slots(MlpModel& model) {
  std::vector<double*> out;
  for (auto& layer : model.mutable_layers()) {
    for (double& w : layer.weights.data()) out.push_back(&w);
    for (double& b : layer.bias) out.push_back(&b);
  }
  return out;
}

std::vector<double> flatten(const ParameterGradients& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (double w : g.weights[l].data()) out.push_back(w);
    for (double b : g.biases[l]) out.push_back(b);
  }
  return out;
}

double check_parameter_gradient(MlpModel& model, const std::function<double()>& f,
                                const std::vector<double>& analytic, double step) {
  const auto slots = parameter_slots(model);
  double worst = 0.0, scale = 0.0;
  for (double a : analytic) scale = std::max(scale, std::abs(a));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    *slots[i] = saved + step;
    const double plus = f();
    *slots[i] = saved - step;
    const double minus = f();
    *slots[i] = saved;
    const double num = (plus - minus) / (2.0 * step);
    const double denom = std::max({std::abs(num), std::abs(analytic[i]), 1e-5 * scale});
    worst = std::max(worst, std::abs(num - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("forward basics") {
  const MlpModel zero({3, 4, 2});
  const Matrix x{{1, 2, 3}, {-1, 0, 5}};
  CHECK(embed(zero, x) == Matrix(2, 2, 0.0));

  MlpModel identity({3, 3});
  auto& l = identity.mutable_layers()[0];
  for (std::size_t i = 0; i < 3; ++i) l.weights(i, i) = 1.0;
  CHECK(embed(identity, x) == x);

  SeededRng rng(4);
  const MlpModel net = MlpModel::initialize({5, 7, 3}, rng);
  const Matrix in = random_matrix(6, 5, rng);
  const Matrix out = embed(net, in);
  const Matrix ref = naive_forward(net, in);
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    CHECK(std::abs(out.data()[i] - ref.data()[i]) <= 1e-12 * std::max(1.0, std::abs(ref.data()[i])));
  }
  CHECK_THROWS_AS(embed(net, Matrix(2, 4)), Error);
}

TEST_CASE("initialization scales") {
  SeededRng rng(8);
  const MlpModel net = MlpModel::initialize({200, 300, 100}, rng);
  const auto& hidden = net.layers()[0].weights;
  const auto& last = net.layers()[1].weights;
  CHECK(variance(hidden.data(), VarianceMode::ZeroMeanAssumed) == doctest::Approx(2.0 / 200.0).epsilon(0.05));
  CHECK(variance(last.data(), VarianceMode::ZeroMeanAssumed) == doctest::Approx(1e-4).epsilon(0.05));
  for (double b : net.layers()[0].bias) CHECK(b == 0.0);
  CHECK(net.parameter_count() == 200 * 300 + 300 + 300 * 100 + 100);
}

TEST_CASE("backward matches finite differences") {
  SeededRng rng(12);
  MlpModel net = MlpModel::initialize({4, 6, 3}, rng);
  // Larger last-layer weights so the gradient is not dominated by tiny entries.
  for (double& w : net.mutable_layers()[1].weights.data()) w = rng.normal();
  const Matrix x = random_matrix(5, 4, rng);

  const auto fwd = forward(net, x);
  const auto zero = backward(net, fwd.cache, Matrix(5, 3));
  for (double g : flatten(zero)) CHECK(g == 0.0);

  // Scalar loss = sum of embeddings.
  const auto g = backward(net, fwd.cache, Matrix(5, 3, 1.0));
  const double err = check_parameter_gradient(
      net,
      [&] {
        double s = 0.0;
        const Matrix e = embed(net, x);
        for (double v : e.data()) s += v;
        return s;
      },
      flatten(g), 1e-6);
  CHECK(err < 1e-6);
}

TEST_CASE("loss gradient through the model") {
  SeededRng rng(31);
  MlpModel net = MlpModel::initialize({6, 8, 5}, rng);
  for (double& w : net.mutable_layers()[1].weights.data()) w = 0.5 * rng.normal();
  const Matrix x = random_matrix(8, 6, rng);
  const std::vector<int> labels{0, 0, 1, 1, 2, 2, 3, 3};
  for (auto kind : {LossKind::Contrastive, LossKind::Triplet, LossKind::Lifted, LossKind::Npair}) {
    LossConfig cfg;
    auto loss_at = [&] {
      return evaluate_loss(kind, make_single_label_batch(embed(net, x), labels), cfg).value;
    };
    const auto fwd = forward(net, x);
    const auto report = evaluate_loss(kind, make_single_label_batch(fwd.embeddings, labels), cfg);
    REQUIRE(report.kink_margin > 1e-4);
    const auto g = backward(net, fwd.cache, report.gradients);
    CHECK(check_parameter_gradient(net, loss_at, flatten(g), 1e-6) < 1e-5);
  }
}

TEST_CASE("stale cache is rejected") {
  SeededRng rng(3);
  MlpModel net = MlpModel::initialize({2, 3, 2}, rng);
  const auto fwd = forward(net, Matrix{{1, 2}});
  net.mutable_layers()[0].bias[0] = 1.0;
  try {
    backward(net, fwd.cache, Matrix(1, 2, 1.0));
    FAIL("expected a State error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::State);
  }
  const MlpModel other = net;
  const auto fwd2 = forward(net, Matrix{{1, 2}});
  CHECK_THROWS_AS(backward(other, fwd2.cache, Matrix(1, 2, 1.0)), Error);
}

TEST_CASE("momentum recurrence on one parameter") {
  MlpModel net({1, 1});
  net.mutable_layers()[0].weights(0, 0) = 1.0;
  SgdMomentum opt(net, 0.1, 0.9);
  auto grads = ParameterGradients::zeros_like(net);
  double w = 1.0, v = 0.0;
  const double g_seq[] = {0.5, -0.25, 1.0, 0.0};
  for (double g : g_seq) {
    grads.weights[0](0, 0) = g;
    opt.step(net, grads);
    v = 0.9 * v - 0.1 * g;
    w = w + v;
    CHECK(net.layers()[0].weights(0, 0) == w);
    CHECK(opt.velocity().weights[0](0, 0) == v);
  }
  // Hand-stepped: v1 = -0.05, w1 = 0.95; v2 = -0.02, w2 = 0.93.
  MlpModel hand({1, 1});
  hand.mutable_layers()[0].weights(0, 0) = 1.0;
  SgdMomentum o2(hand, 0.1);
  grads.weights[0](0, 0) = 0.5;
  o2.step(hand, grads);
  CHECK(hand.layers()[0].weights(0, 0) == doctest::Approx(0.95));
  grads.weights[0](0, 0) = -0.25;
  o2.step(hand, grads);
  CHECK(hand.layers()[0].weights(0, 0) == doctest::Approx(0.93));
}

namespace {

LabeledBatch two_blobs(SeededRng& rng, std::size_t per_class) {
  Matrix x(2 * per_class, 2);
  std::vector<int> labels;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int c = static_cast<int>(i % 2);
    x(i, 0) = (c ? 2.0 : -2.0) + 0.5 * rng.normal();
    x(i, 1) = (c ? -1.0 : 1.0) + 0.5 * rng.normal();
    labels.push_back(c);
  }
  return make_single_label_batch(x, labels);
}

}  // namespace

TEST_CASE("training on two 2-D blobs lowers the loss") {
  SeededRng rng(21);
  const auto data = two_blobs(rng, 40);
  SeededRng init(5);
  MlpModel net = MlpModel::initialize({2, 16, 4}, init);
  TrainConfig cfg;
  cfg.loss_kind = LossKind::Contrastive;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 20;
  cfg.epochs = 50;
  SeededRng train_rng(9);
  const auto trace = train(net, data, cfg, train_rng);
  CHECK(trace.epoch_loss.size() == 50);
  CHECK(trace.final_loss() < trace.initial_loss);
  CHECK(net.parameters_finite());
}

TEST_CASE("training determinism and zero learning rate") {
  SeededRng rng(22);
  const auto data = two_blobs(rng, 20);
  TrainConfig cfg;
  cfg.loss_kind = LossKind::Triplet;
  cfg.batch_size = 10;
  cfg.epochs = 5;
  auto run = [&](double lr) {
    SeededRng init(1), tr(2);
    MlpModel net = MlpModel::initialize({2, 8, 3}, init);
    TrainConfig c = cfg;
    c.learning_rate = lr;
    const auto trace = train(net, data, c, tr);
    return std::make_pair(net, trace);
  };
  const auto [a, ta] = run(1e-2);
  const auto [b, tb] = run(1e-2);
  CHECK(a == b);
  CHECK(ta.epoch_loss == tb.epoch_loss);
  CHECK(ta.initial_loss == tb.initial_loss);

  SeededRng init(1);
  const MlpModel fresh = MlpModel::initialize({2, 8, 3}, init);
  const auto [z, tz] = run(0.0);
  CHECK(z == fresh);
  for (double l : tz.epoch_loss) CHECK(l == doctest::Approx(tz.initial_loss).epsilon(1e-12));
}

TEST_CASE("un-minable batches are skipped with a warning") {
  // Every label distinct: no positive pair exists in any batch.
  Matrix x(6, 2);
  for (std::size_t i = 0; i < 6; ++i) x(i, 0) = x(i, 1) = static_cast<double>(i) + 1.0;
  const auto data = make_single_label_batch(x, {0, 1, 2, 3, 4, 5});
  SeededRng init(1), tr(2);
  MlpModel net = MlpModel::initialize({2, 3}, init);
  TrainConfig cfg;
  cfg.loss_kind = LossKind::Triplet;
  cfg.batch_size = 3;
  cfg.epochs = 2;
  const auto trace = train(net, data, cfg, tr);
  CHECK(trace.skipped_batches > 0);
  CHECK_FALSE(trace.warnings.empty());
  CHECK(trace.steps == 0);
}

TEST_CASE("batch samplers") {
  SeededRng rng(6);
  const auto b = shuffled_batches(11, 4, rng);
  CHECK(b.size() == 3);
  std::vector<int> seen(11, 0);
  for (const auto& batch : b)
    for (auto i : batch) ++seen[i];
  for (int s : seen) CHECK(s == 1);

  std::vector<LabelSet> labels;
  for (int i = 0; i < 30; ++i) labels.push_back({i % 5});
  const auto np = npair_batches(labels, 6, rng);
  CHECK_FALSE(np.empty());
  for (const auto& batch : np) {
    CHECK(batch.size() % 2 == 0);
    std::map<int, int> count;
    for (auto i : batch) ++count[labels[i].front()];
    for (auto& [c, n] : count) CHECK(n == 2);
  }
}

TEST_CASE("checkpoint round-trip") {
  SeededRng rng(14);
  const MlpModel net = MlpModel::initialize({3, 5, 4, 2}, rng);
  std::stringstream ss;
  save_checkpoint(net, ss);
  const std::string text = ss.str();
  CHECK(text.rfind("snrml-mlp-checkpoint\n", 0) == 0);
  const MlpModel back = load_checkpoint(ss);
  CHECK(back == net);

  std::istringstream bad("not-a-checkpoint\n");
  CHECK_THROWS_AS(load_checkpoint(bad), Error);
  std::istringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(truncated), Error);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
