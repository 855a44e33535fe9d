#include "snrml/model.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace snrml {

namespace {

constexpr const char* kCheckpointMagic = "snrml-mlp-checkpoint";
constexpr int kCheckpointVersion = 1;

void require_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) {
    throw Error(ErrorCategory::Parameter, "MlpModel: need at least input and output sizes");
  }
  for (std::size_t s : sizes) {
    if (s == 0) throw Error(ErrorCategory::Parameter, "MlpModel: layer sizes must be positive");
  }
}

}  // namespace

std::uint64_t MlpModel::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

MlpModel::MlpModel(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)), id_(next_id()) {
  require_sizes(sizes_);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    layers_.push_back({Matrix(sizes_[l + 1], sizes_[l]), Vector(sizes_[l + 1], 0.0)});
  }
}

MlpModel::MlpModel(const MlpModel& other)
    : sizes_(other.sizes_), layers_(other.layers_), id_(next_id()) {}

MlpModel& MlpModel::operator=(const MlpModel& other) {
  if (this != &other) {
    sizes_ = other.sizes_;
    layers_ = other.layers_;
    ++version_;
  }
  return *this;
}

MlpModel MlpModel::initialize(std::vector<std::size_t> sizes, SeededRng& rng) {
  MlpModel model(std::move(sizes));
  auto& layers = model.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const bool embedding_layer = l + 1 == layers.size();
    const double fan_in = static_cast<double>(layers[l].weights.cols());
    const double sd = embedding_layer ? 0.01 : std::sqrt(2.0 / fan_in);
    for (double& w : layers[l].weights.data()) w = sd * rng.normal();
  }
  return model;
}

std::size_t MlpModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.data().size() + layer.bias.size();
  return n;
}

bool MlpModel::parameters_finite() const noexcept {
  for (const auto& layer : layers_) {
    for (double w : layer.weights.data()) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

ParameterGradients ParameterGradients::zeros_like(const MlpModel& model) {
  ParameterGradients g;
  for (const auto& layer : model.layers()) {
    g.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
    g.biases.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

ForwardResult forward(const MlpModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim()) {
    throw Error(ErrorCategory::Dimension,
                "forward: input dimension " + std::to_string(inputs.cols()) +
                    " does not match model input " + std::to_string(model.input_dim()));
  }
  ForwardResult result;
  result.cache.model_id = model.id();
  result.cache.model_version = model.version();
  Matrix x = inputs;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    Matrix z(x.rows(), layer.weights.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto xr = x.row(r);
      auto zr = z.row(r);
      for (std::size_t o = 0; o < layer.weights.rows(); ++o) {
        zr[o] = layer.bias[o] + dot(layer.weights.row(o), xr);
      }
    }
    result.cache.inputs.push_back(std::move(x));
    const bool hidden = l + 1 < layers.size();
    x = z;
    if (hidden) {
      for (double& v : x.data()) v = v > 0.0 ? v : 0.0;
    }
    result.cache.pre_activations.push_back(std::move(z));
  }
  result.embeddings = std::move(x);
  return result;
}

ParameterGradients backward(const MlpModel& model, const ForwardCache& cache,
                            const Matrix& grad_embeddings) {
  if (cache.model_id != model.id() || cache.model_version != model.version()) {
    throw Error(ErrorCategory::State, "backward: cache is stale (parameters changed since forward)");
  }
  const auto& layers = model.layers();
  if (cache.inputs.size() != layers.size()) {
    throw Error(ErrorCategory::State, "backward: cache does not match model depth");
  }
  const std::size_t batch = cache.inputs.front().rows();
  if (grad_embeddings.rows() != batch || grad_embeddings.cols() != model.output_dim()) {
    throw Error(ErrorCategory::Dimension, "backward: gradient shape does not match embeddings");
  }

  ParameterGradients grads = ParameterGradients::zeros_like(model);
  Matrix delta = grad_embeddings;  // dJ/dz of the current layer
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const Matrix& x = cache.inputs[l];
    auto& gw = grads.weights[l];
    auto& gb = grads.biases[l];
    for (std::size_t r = 0; r < batch; ++r) {
      auto dr = delta.row(r);
      auto xr = x.row(r);
      for (std::size_t o = 0; o < gw.rows(); ++o) {
        if (dr[o] == 0.0) continue;
        gb[o] += dr[o];
        auto gwo = gw.row(o);
        for (std::size_t i = 0; i < gwo.size(); ++i) gwo[i] += dr[o] * xr[i];
      }
    }
    if (l == 0) break;
    // Propagate to the previous layer's pre-activation through W and the ReLU.
    const Matrix& z_prev = cache.pre_activations[l - 1];
    Matrix next(batch, layer.weights.cols());
    for (std::size_t r = 0; r < batch; ++r) {
      auto dr = delta.row(r);
      auto nr = next.row(r);
      for (std::size_t o = 0; o < layer.weights.rows(); ++o) {
        if (dr[o] == 0.0) continue;
        auto wo = layer.weights.row(o);
        for (std::size_t i = 0; i < nr.size(); ++i) nr[i] += dr[o] * wo[i];
      }
      auto zr = z_prev.row(r);
      for (std::size_t i = 0; i < nr.size(); ++i) {
        if (!(zr[i] > 0.0)) nr[i] = 0.0;
      }
    }
    delta = std::move(next);
  }
  return grads;
}

SgdMomentum::SgdMomentum(const MlpModel& model, double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum),
      velocity_(ParameterGradients::zeros_like(model)) {
  if (!(learning_rate >= 0.0)) throw Error(ErrorCategory::Parameter, "SGD: learning rate < 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCategory::Parameter, "SGD: momentum must lie in [0, 1)");
  }
}

void SgdMomentum::step(MlpModel& model, const ParameterGradients& grads) {
  auto& layers = model.mutable_layers();
  if (grads.weights.size() != layers.size()) {
    throw Error(ErrorCategory::Dimension, "SGD: gradient layer count mismatch");
  }
  auto update = [&](std::span<double> w, std::span<double> v, std::span<const double> g) {
    if (w.size() != g.size()) throw Error(ErrorCategory::Dimension, "SGD: gradient shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum_ * v[i] - learning_rate_ * g[i];
      w[i] += v[i];
    }
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights.data(), velocity_.weights[l].data(), grads.weights[l].data());
    update(layers[l].bias, velocity_.biases[l], grads.biases[l]);
  }
}

void TrainConfig::validate() const {
  loss.validate();
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCategory::Parameter, "TrainConfig: learning rate must be >= 0");
  }
  if (batch_size < 2) throw Error(ErrorCategory::Parameter, "TrainConfig: batch size must be >= 2");
  if (loss_kind == LossKind::Npair && batch_size < 4) {
    throw Error(ErrorCategory::Parameter, "TrainConfig: N-pair batches need >= 4 samples");
  }
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t count, std::size_t batch_size,
                                                       SeededRng& rng) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + batch_size);
    if (end - start < 2) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::vector<std::vector<std::size_t>> npair_batches(const std::vector<LabelSet>& labels,
                                                    std::size_t batch_size, SeededRng& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != 1) {
      throw Error(ErrorCategory::Mining, "npair sampler: multi-label sample " + std::to_string(i));
    }
    by_class[labels[i].front()].push_back(i);
  }
  // Per class: shuffled members cut into consecutive pairs, consumed from the back.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs;
  for (auto& [label, members] : by_class) {
    rng.shuffle(members);
    std::vector<std::pair<std::size_t, std::size_t>> cls;
    for (std::size_t k = 0; k + 1 < members.size(); k += 2) cls.emplace_back(members[k], members[k + 1]);
    pairs.push_back(std::move(cls));
  }
  const std::size_t classes_per_batch = std::max<std::size_t>(2, batch_size / 2);
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> class_order(pairs.size());
  for (std::size_t c = 0; c < class_order.size(); ++c) class_order[c] = c;
  while (true) {
    std::vector<std::size_t> available;
    for (std::size_t c : class_order) {
      if (!pairs[c].empty()) available.push_back(c);
    }
    if (available.size() < 2) break;
    rng.shuffle(available);
    std::vector<std::size_t> batch;
    for (std::size_t k = 0; k < std::min(classes_per_batch, available.size()); ++k) {
      auto [a, b] = pairs[available[k]].back();
      pairs[available[k]].pop_back();
      batch.push_back(a);
      batch.push_back(b);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

namespace {

LabeledBatch gather(const LabeledBatch& data, const std::vector<std::size_t>& idx) {
  LabeledBatch out{Matrix(idx.size(), data.embeddings.cols()), {}};
  out.labels.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto src = data.embeddings.row(idx[k]);
    std::copy(src.begin(), src.end(), out.embeddings.row(k).begin());
    out.labels.push_back(data.labels[idx[k]]);
  }
  return out;
}

}  // namespace

TrainTrace train(MlpModel& model, const LabeledBatch& data, const TrainConfig& cfg,
                 SeededRng& rng) {
  cfg.validate();
  data.validate();
  if (data.embeddings.cols() != model.input_dim()) {
    throw Error(ErrorCategory::Dimension, "train: data dimension does not match model input");
  }
  SgdMomentum optimizer(model, cfg.learning_rate, cfg.momentum);
  TrainTrace trace;

  auto make_batches = [&] {
    return cfg.loss_kind == LossKind::Npair ? npair_batches(data.labels, cfg.batch_size, rng)
                                            : shuffled_batches(data.size(), cfg.batch_size, rng);
  };
  auto warn = [&](std::size_t epoch, std::size_t b, const Error& e) {
    trace.warnings.push_back("epoch " + std::to_string(epoch) + " batch " + std::to_string(b) +
                             " skipped: " + e.what());
  };

  // Loss curve points are measured on one fixed partition (the first epoch's
  // batches) so that successive values are comparable.
  std::vector<LabeledBatch> probe;
  auto probe_loss = [&] {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& in : probe) {
      try {
        sum += evaluate_loss(cfg.loss_kind, LabeledBatch{embed(model, in.embeddings), in.labels},
                             cfg.loss)
                   .value;
        ++n;
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::Mining) throw;
      }
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
  };

  for (std::size_t epoch = 0; epoch < std::max<std::size_t>(cfg.epochs, 1); ++epoch) {
    auto batches = make_batches();
    std::vector<LabeledBatch> inputs;
    inputs.reserve(batches.size());
    for (const auto& idx : batches) inputs.push_back(gather(data, idx));

    if (epoch == 0) {
      probe = inputs;
      trace.initial_loss = probe_loss();
      if (cfg.epochs == 0) break;
    }

    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      auto fwd = forward(model, inputs[b].embeddings);
      LossReport report;
      try {
        report = evaluate_loss(cfg.loss_kind, LabeledBatch{fwd.embeddings, inputs[b].labels},
                               cfg.loss);
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::Mining) throw;
        ++trace.skipped_batches;
        warn(epoch, b, e);
        continue;
      }
      sum += report.value;
      ++n;
      optimizer.step(model, backward(model, fwd.cache, report.gradients));
      ++trace.steps;
      if (!model.parameters_finite()) {
        throw Error(ErrorCategory::Numeric, "train: non-finite parameters after step " +
                                                std::to_string(trace.steps));
      }
    }
    trace.epoch_train_loss.push_back(n > 0 ? sum / static_cast<double>(n) : 0.0);
    trace.epoch_loss.push_back(probe_loss());
  }
  return trace;
}

namespace {

void write_double(std::ostream& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

double read_double(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw Error(ErrorCategory::Data, "checkpoint: truncated parameter block");
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw Error(ErrorCategory::Data, "checkpoint: bad number '" + token + "'");
  }
  return v;
}

void expect(std::istream& in, const std::string& word) {
  std::string token;
  if (!(in >> token) || token != word) {
    throw Error(ErrorCategory::Data, "checkpoint: expected '" + word + "', found '" + token + "'");
  }
}

std::size_t read_size(std::istream& in) {
  long long v = -1;
  if (!(in >> v) || v < 0) throw Error(ErrorCategory::Data, "checkpoint: bad size field");
  return static_cast<std::size_t>(v);
}

}  // namespace

// Layout (whitespace separated, shortest round-trip decimal numbers):
//   snrml-mlp-checkpoint
//   version 1
//   sizes <count> <D_in> ... <M>
//   layer <l> weights <rows> <cols>   followed by rows*cols values, row-major
//   layer <l> bias <rows>             followed by rows values
//   end
void save_checkpoint(const MlpModel& model, std::ostream& out) {
  out << kCheckpointMagic << "\nversion " << kCheckpointVersion << "\nsizes "
      << model.layer_sizes().size();
  for (std::size_t s : model.layer_sizes()) out << ' ' << s;
  out << '\n';
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    out << "layer " << l << " weights " << w.rows() << ' ' << w.cols() << '\n';
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < w.cols(); ++c) {
        if (c) out << ' ';
        write_double(out, w(r, c));
      }
      out << '\n';
    }
    out << "layer " << l << " bias " << layers[l].bias.size() << '\n';
    for (std::size_t k = 0; k < layers[l].bias.size(); ++k) {
      if (k) out << ' ';
      write_double(out, layers[l].bias[k]);
    }
    out << '\n';
  }
  out << "end\n";
}

MlpModel load_checkpoint(std::istream& in) {
  expect(in, kCheckpointMagic);
  expect(in, "version");
  if (read_size(in) != kCheckpointVersion) {
    throw Error(ErrorCategory::Data, "checkpoint: unsupported version");
  }
  expect(in, "sizes");
  std::vector<std::size_t> sizes(read_size(in));
  for (auto& s : sizes) s = read_size(in);
  MlpModel model(sizes);
  auto& layers = model.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    expect(in, "layer");
    if (read_size(in) != l) throw Error(ErrorCategory::Data, "checkpoint: layer out of order");
    expect(in, "weights");
    const std::size_t rows = read_size(in);
    const std::size_t cols = read_size(in);
    if (rows != layers[l].weights.rows() || cols != layers[l].weights.cols()) {
      throw Error(ErrorCategory::Data, "checkpoint: weight shape does not match sizes");
    }
    for (double& w : layers[l].weights.data()) w = read_double(in);
    expect(in, "layer");
    if (read_size(in) != l) throw Error(ErrorCategory::Data, "checkpoint: layer out of order");
    expect(in, "bias");
    if (read_size(in) != layers[l].bias.size()) {
      throw Error(ErrorCategory::Data, "checkpoint: bias shape does not match sizes");
    }
    for (double& b : layers[l].bias) b = read_double(in);
  }
  expect(in, "end");
  return model;
}

void save_checkpoint(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::Data, "cannot write checkpoint " + path);
  save_checkpoint(model, out);
}

MlpModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Data, "cannot read checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace snrml
