#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "perreg/baselines.hpp"
#include "perreg/matrix.hpp"
#include "perreg/regularizer.hpp"
#include "perreg/sliced.hpp"
#include "perreg/special_fns.hpp"

namespace perreg {

enum class Activation { relu, leaky_relu, elu, identity };

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kEluAlpha = 1.0;

std::string_view to_string(Activation a);
std::optional<Activation> parse_activation(std::string_view name);

double activate(Activation a, double u);
// Derivative at pre-activation u; `h` is activate(a, u).
double activation_derivative(Activation a, double u, double h);

struct DenseLayer {
  Matrix weights;             // d_out x d_in
  std::vector<double> bias;   // d_out
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
};

// Hidden layers followed by a linear softmax-cross-entropy head. When
// `norms` is non-empty it holds one normalization state per hidden layer,
// applied between the affine map and the activation.
struct Network {
  std::vector<DenseLayer> layers;
  std::vector<BnState> norms;

  std::size_t hidden_count() const { return layers.empty() ? 0 : layers.size() - 1; }
  std::size_t class_count() const { return layers.empty() ? 0 : layers.back().out_dim(); }
  bool has_batch_norm() const { return !norms.empty(); }

  std::vector<std::span<double>> parameter_views();
};

struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t classes = 0;
  Activation activation = Activation::relu;
  bool batch_norm = false;
};

enum class InitScheme { he, glorot };

// He-uniform or Glorot-uniform weights, zero biases. Throws
// std::domain_error for an empty hidden stack or any zero width.
Network init_network(const NetworkSpec& spec, InitScheme init, RngStream& rng);

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> affine;       // W h + b, per hidden layer
  std::vector<Matrix> pre;          // argument of the activation (after BN if any)
  std::vector<BnCache> norm_cache;  // per hidden layer when BN is on
  std::vector<Matrix> activations;  // post-activation h per hidden layer
  Matrix logits;
};

// Training-mode pass: normalization uses batch statistics and updates the
// running moments held in `net`.
ForwardCache forward(Network& net, const Matrix& inputs);
// Evaluation-mode pass; never mutates the network.
ForwardCache forward(const Network& net, const Matrix& inputs);

struct LossResult {
  double loss = 0.0;  // mean over the batch
  Matrix grad;        // d loss / d logits
};

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;
  std::vector<std::vector<double>> gamma;
  std::vector<std::vector<double>> beta;
  double data_loss = 0.0;

  // Same order as Network::parameter_views.
  std::vector<std::span<const double>> views() const;
};

// Gradients of the mean cross-entropy, with the regularizer hook applied to
// every hidden layer. For RegMethod::per, `slices` must hold one SliceSet
// per hidden layer; it is ignored otherwise.
Gradients backward(const Network& net, const ForwardCache& cache, std::span<const int> labels,
                   const RegConfig& reg, std::span<const SliceSet> slices = {});

struct SgdOptions {
  double lr = 0.01;
  double momentum = 0.0;
  std::optional<double> grad_clip_norm;
};

struct SgdState {
  std::vector<std::vector<double>> velocity;
};

// Classical momentum: v <- momentum v + g, p <- p - lr v. With clipping the
// gradients are rescaled to the given global norm first.
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, const SgdOptions& opts,
              SgdState& state);

struct LabeledData {
  Matrix features;
  std::vector<int> labels;
  std::size_t classes = 0;

  std::size_t size() const { return features.rows(); }
};

struct TrainConfig {
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::optional<double> grad_clip_norm;
  RegConfig reg;
  InitScheme init = InitScheme::he;
  RngStream seed{0};

  SgdOptions sgd() const { return {lr, momentum, grad_clip_norm}; }
  // Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

struct TrainState {
  SgdState sgd;
  std::uint64_t iteration = 0;
};

// One pass over `data` in a seed-determined order. Returns the mean batch
// loss. Slices for PER are drawn from cfg.reg.seed split by (layer,
// iteration). A trailing batch of one sample is dropped.
double train_epoch(Network& net, const LabeledData& data, const TrainConfig& cfg,
                   TrainState& state, std::size_t epoch);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const Network& net, const LabeledData& data);

}  // namespace perreg
