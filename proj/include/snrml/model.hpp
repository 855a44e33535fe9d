#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "snrml/losses.hpp"
#include "snrml/mining.hpp"
#include "snrml/numerics.hpp"

namespace snrml {

/// Fully-connected layer computing y = W x + b, with W stored (out x in).
struct DenseLayer {
  Matrix weights;
  Vector bias;
};

/// Embedding MLP: ReLU on hidden layers, identity on the output layer.
///
/// Every instance carries an identity and a version counter. Mutation through
/// mutable_layers() bumps the version, which lets backward() reject caches
/// produced before the last parameter update.
class MlpModel {
 public:
  /// All-zero parameters. `sizes` is [D_in, hidden..., M] with at least two entries.
  explicit MlpModel(std::vector<std::size_t> sizes);
  MlpModel(const MlpModel& other);
  MlpModel& operator=(const MlpModel& other);
  MlpModel(MlpModel&&) noexcept = default;
  MlpModel& operator=(MlpModel&&) noexcept = default;

  /// He-scaled normal weights on hidden layers, N(0, 0.01^2) on the embedding
  /// layer, zero biases.
  static MlpModel initialize(std::vector<std::size_t> sizes, SeededRng& rng);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t input_dim() const noexcept { return sizes_.front(); }
  std::size_t output_dim() const noexcept { return sizes_.back(); }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& mutable_layers() noexcept {
    ++version_;
    return layers_;
  }

  std::uint64_t id() const noexcept { return id_; }
  std::uint64_t version() const noexcept { return version_; }

  std::size_t parameter_count() const noexcept;
  bool parameters_finite() const noexcept;

  friend bool operator==(const MlpModel& a, const MlpModel& b) {
    return a.sizes_ == b.sizes_ && a.layers_.size() == b.layers_.size() &&
           std::equal(a.layers_.begin(), a.layers_.end(), b.layers_.begin(),
                      [](const DenseLayer& x, const DenseLayer& y) {
                        return x.weights == y.weights && x.bias == y.bias;
                      });
  }

 private:
  static std::uint64_t next_id();

  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
  std::uint64_t id_;
  std::uint64_t version_ = 0;
};

/// Activations saved by forward() for the matching backward().
struct ForwardCache {
  std::uint64_t model_id = 0;
  std::uint64_t model_version = 0;
  std::vector<Matrix> inputs;          // input to each layer
  std::vector<Matrix> pre_activations; // W x + b of each layer
};

struct ForwardResult {
  Matrix embeddings;
  ForwardCache cache;
};

/// Same shapes as the model's layers.
struct ParameterGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static ParameterGradients zeros_like(const MlpModel& model);
};

ForwardResult forward(const MlpModel& model, const Matrix& inputs);

inline Matrix embed(const MlpModel& model, const Matrix& inputs) {
  return forward(model, inputs).embeddings;
}

/// Reverse-mode gradients of a scalar loss whose gradient with respect to the
/// embeddings is `grad_embeddings`. Throws a State error if the cache does not
/// come from the current parameters of `model`.
ParameterGradients backward(const MlpModel& model, const ForwardCache& cache,
                            const Matrix& grad_embeddings);

/// Mini-batch SGD with heavy-ball momentum:
///   v <- momentum * v - learning_rate * g
///   w <- w + v
class SgdMomentum {
 public:
  SgdMomentum(const MlpModel& model, double learning_rate, double momentum = 0.9);

  void step(MlpModel& model, const ParameterGradients& grads);

  double learning_rate() const noexcept { return learning_rate_; }
  double momentum() const noexcept { return momentum_; }
  const ParameterGradients& velocity() const noexcept { return velocity_; }

 private:
  double learning_rate_;
  double momentum_;
  ParameterGradients velocity_;
};

struct TrainConfig {
  LossKind loss_kind = LossKind::Contrastive;
  LossConfig loss;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t batch_size = 50;
  std::size_t epochs = 10;

  void validate() const;
};

struct TrainTrace {
  /// Mean loss over the first epoch's batches, evaluated before any update.
  double initial_loss = 0.0;
  /// The same fixed-batch mean loss, evaluated after each epoch.
  std::vector<double> epoch_loss;
  /// Mean loss of the batches as they were stepped on during each epoch.
  std::vector<double> epoch_train_loss;
  std::size_t steps = 0;
  std::size_t skipped_batches = 0;
  std::vector<std::string> warnings;

  double final_loss() const { return epoch_loss.empty() ? initial_loss : epoch_loss.back(); }
};

/// Class-balanced batches of two samples per class, for the N-pair loss.
std::vector<std::vector<std::size_t>> npair_batches(const std::vector<LabelSet>& labels,
                                                    std::size_t batch_size, SeededRng& rng);
/// Shuffled fixed-size batches; a trailing batch with fewer than two samples is dropped.
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t count, std::size_t batch_size,
                                                       SeededRng& rng);

/// Trains `model` in place on `data` (raw inputs with labels). The trace is a
/// pure function of (model, data, cfg, rng state).
TrainTrace train(MlpModel& model, const LabeledBatch& data, const TrainConfig& cfg,
                 SeededRng& rng);

void save_checkpoint(const MlpModel& model, std::ostream& out);
MlpModel load_checkpoint(std::istream& in);
void save_checkpoint(const MlpModel& model, const std::string& path);
MlpModel load_checkpoint(const std::string& path);

}  // namespace snrml
