#include "perreg/nn.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace perreg {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::elu: return "elu";
    case Activation::identity: return "identity";
  }
  return "unknown";
}

std::optional<Activation> parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu" || name == "lrelu") return Activation::leaky_relu;
  if (name == "elu") return Activation::elu;
  if (name == "identity" || name == "linear") return Activation::identity;
  return std::nullopt;
}

double activate(Activation a, double u) {
  switch (a) {
    case Activation::relu: return u > 0 ? u : 0.0;
    case Activation::leaky_relu: return u > 0 ? u : kLeakySlope * u;
    case Activation::elu: return u > 0 ? u : kEluAlpha * std::expm1(u);
    case Activation::identity: return u;
  }
  return u;
}

double activation_derivative(Activation a, double u, double h) {
  switch (a) {
    case Activation::relu: return u > 0 ? 1.0 : 0.0;
    case Activation::leaky_relu: return u > 0 ? 1.0 : kLeakySlope;
    case Activation::elu: return u > 0 ? 1.0 : h + kEluAlpha;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

std::vector<std::span<double>> Network::parameter_views() {
  std::vector<std::span<double>> v;
  for (auto& layer : layers) {
    v.emplace_back(layer.weights.flat());
    v.emplace_back(layer.bias);
  }
  for (auto& n : norms) {
    v.emplace_back(n.gamma);
    v.emplace_back(n.beta);
  }
  return v;
}

std::vector<std::span<const double>> Gradients::views() const {
  std::vector<std::span<const double>> v;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    v.emplace_back(weights[l].flat());
    v.emplace_back(bias[l]);
  }
  for (std::size_t l = 0; l < gamma.size(); ++l) {
    v.emplace_back(gamma[l]);
    v.emplace_back(beta[l]);
  }
  return v;
}

Network init_network(const NetworkSpec& spec, InitScheme init, RngStream& rng) {
  if (spec.hidden_widths.empty()) throw std::domain_error("init_network: need at least one hidden layer");
  if (spec.input_dim == 0 || spec.classes == 0) {
    throw std::domain_error("init_network: input and class dimensions must be positive");
  }
  for (std::size_t w : spec.hidden_widths) {
    if (w == 0) throw std::domain_error("init_network: zero-width hidden layer");
  }
  std::vector<std::size_t> dims{spec.input_dim};
  dims.insert(dims.end(), spec.hidden_widths.begin(), spec.hidden_widths.end());
  dims.push_back(spec.classes);

  Network net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l];
    const std::size_t fan_out = dims[l + 1];
    const double limit = init == InitScheme::he
                             ? std::sqrt(6.0 / static_cast<double>(fan_in))
                             : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer;
    layer.weights = Matrix(fan_out, fan_in);
    for (double& w : layer.weights.flat()) w = limit * (2.0 * rng.uniform() - 1.0);
    layer.bias.assign(fan_out, 0.0);
    const bool is_head = l + 2 == dims.size();
    layer.activation = is_head ? Activation::identity : spec.activation;
    net.layers.push_back(std::move(layer));
  }
  if (spec.batch_norm) {
    for (std::size_t w : spec.hidden_widths) net.norms.emplace_back(w);
  }
  return net;
}

namespace {

Matrix affine(const DenseLayer& layer, const Matrix& in) {
  if (in.cols() != layer.in_dim()) {
    throw std::domain_error("forward: input has " + std::to_string(in.cols()) +
                            " features, layer expects " + std::to_string(layer.in_dim()));
  }
  Matrix z = matmul_transposed(in, layer.weights);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias[j];
  }
  return z;
}

ForwardCache forward_impl(const Network& net, const Matrix& inputs, std::vector<BnState>* train_norms) {
  if (net.layers.size() < 2) throw std::domain_error("forward: network needs a hidden layer and a head");
  ForwardCache c;
  c.input = inputs;
  const Matrix* h = &c.input;
  for (std::size_t l = 0; l < net.hidden_count(); ++l) {
    const DenseLayer& layer = net.layers[l];
    c.affine.push_back(affine(layer, *h));
    if (net.has_batch_norm()) {
      BnForwardResult bn;
      if (train_norms) {
        bn = bn_forward(c.affine.back(), (*train_norms)[l], true);
      } else {
        BnState frozen = net.norms[l];
        bn = bn_forward(c.affine.back(), frozen, false);
      }
      c.pre.push_back(std::move(bn.out));
      c.norm_cache.push_back(std::move(bn.cache));
    } else {
      c.pre.push_back(c.affine.back());
    }
    Matrix act = c.pre.back();
    for (double& v : act.flat()) v = activate(layer.activation, v);
    c.activations.push_back(std::move(act));
    h = &c.activations.back();
  }
  c.logits = affine(net.layers.back(), *h);
  return c;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) s[j] += row[j];
  }
  return s;
}

void add_in_place(Matrix& a, const Matrix& b) {
  auto af = a.flat();
  const auto bf = b.flat();
  for (std::size_t n = 0; n < af.size(); ++n) af[n] += bf[n];
}

// Regularizer hook on the gradient flowing into `values` (post- or
// pre-activation of one hidden layer).
Matrix apply_hook(Matrix grad, const Matrix& values, const RegConfig& reg, const SliceSet* slices) {
  switch (reg.method) {
    case RegMethod::per:
      if (reg.lambda == 0.0) return grad;
      if (!slices) throw std::domain_error("backward: per regularizer needs a SliceSet per layer");
      return apply_per_backward(grad, values, reg.lambda, *slices);
    case RegMethod::l1:
    case RegMethod::l2: {
      if (reg.lambda == 0.0) return grad;
      const int p = reg.method == RegMethod::l1 ? 1 : 2;
      add_in_place(grad, lp_activation_penalty(values, p, reg.lambda).grad);
      return grad;
    }
    case RegMethod::none:
    case RegMethod::bn:
      return grad;
  }
  return grad;
}

}  // namespace

ForwardCache forward(Network& net, const Matrix& inputs) { return forward_impl(net, inputs, &net.norms); }

ForwardCache forward(const Network& net, const Matrix& inputs) { return forward_impl(net, inputs, nullptr); }

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw std::domain_error("softmax_cross_entropy: label count mismatch");
  LossResult r{0.0, Matrix(logits.rows(), logits.cols())};
  const double inv_b = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
      throw std::domain_error("softmax_cross_entropy: label out of range");
    }
    const auto z = logits.row(i);
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double log_norm = zmax + std::log(sum);
    r.loss += log_norm - z[static_cast<std::size_t>(y)];
    auto g = r.grad.row(i);
    for (std::size_t j = 0; j < z.size(); ++j) g[j] = std::exp(z[j] - log_norm) * inv_b;
    g[static_cast<std::size_t>(y)] -= inv_b;
  }
  r.loss *= inv_b;
  return r;
}

Gradients backward(const Network& net, const ForwardCache& cache, std::span<const int> labels,
                   const RegConfig& reg, std::span<const SliceSet> slices) {
  const std::size_t hidden = net.hidden_count();
  if (cache.activations.size() != hidden) throw std::domain_error("backward: cache does not match network");
  if (reg.method == RegMethod::per && reg.lambda != 0.0 && slices.size() != hidden) {
    throw std::domain_error("backward: expected one SliceSet per hidden layer");
  }

  Gradients g;
  g.weights.resize(net.layers.size());
  g.bias.resize(net.layers.size());
  if (net.has_batch_norm()) {
    g.gamma.resize(hidden);
    g.beta.resize(hidden);
  }

  LossResult loss = softmax_cross_entropy(cache.logits, labels);
  g.data_loss = loss.loss;

  Matrix delta = std::move(loss.grad);
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const DenseLayer& layer = net.layers[l];
    if (l < hidden) {
      const SliceSet* s = slices.empty() ? nullptr : &slices[l];
      // delta currently holds d/dh for the post-activation of layer l.
      if (reg.target == RegTarget::post_activation) delta = apply_hook(std::move(delta), cache.activations[l], reg, s);
      const Matrix& pre = cache.pre[l];
      const Matrix& post = cache.activations[l];
      auto df = delta.flat();
      const auto pf = pre.flat();
      const auto hf = post.flat();
      for (std::size_t n = 0; n < df.size(); ++n) df[n] *= activation_derivative(layer.activation, pf[n], hf[n]);
      if (reg.target == RegTarget::pre_activation) delta = apply_hook(std::move(delta), pre, reg, s);
      if (net.has_batch_norm()) {
        BnGradients bg = bn_backward(delta, cache.norm_cache[l]);
        g.gamma[l] = std::move(bg.gamma);
        g.beta[l] = std::move(bg.beta);
        delta = std::move(bg.input);
      }
    }
    const Matrix& below = l == 0 ? cache.input : cache.activations[l - 1];
    g.weights[l] = transposed_matmul(delta, below);
    g.bias[l] = column_sums(delta);
    if (l > 0) delta = matmul(delta, layer.weights);
  }
  return g;
}

void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, const SgdOptions& opts,
              SgdState& state) {
  if (params.size() != grads.size()) throw std::domain_error("sgd_step: parameter/gradient count mismatch");
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grads[t].size()) throw std::domain_error("sgd_step: tensor size mismatch");
  }
  double scale = 1.0;
  if (opts.grad_clip_norm) {
    double sq = 0.0;
    for (const auto& g : grads) {
      for (double v : g) sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm > *opts.grad_clip_norm) scale = *opts.grad_clip_norm / norm;
  }
  if (state.velocity.size() != params.size()) {
    state.velocity.clear();
    for (const auto& p : params) state.velocity.emplace_back(p.size(), 0.0);
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& v = state.velocity[t];
    for (std::size_t n = 0; n < v.size(); ++n) {
      v[n] = opts.momentum * v[n] + scale * grads[t][n];
      params[t][n] -= opts.lr * v[n];
    }
  }
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (reg.method == RegMethod::bn && batch_size < 2) {
    throw std::invalid_argument("TrainConfig: batch normalization needs batch_size >= 2");
  }
  if (grad_clip_norm && !(*grad_clip_norm > 0.0)) throw std::invalid_argument("TrainConfig: grad_clip_norm must be > 0");
  reg.validate();
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

double train_epoch(Network& net, const LabeledData& data, const TrainConfig& cfg, TrainState& state,
                   std::size_t epoch) {
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream shuffle = cfg.seed.split(kShuffleStream, epoch);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

  const bool draw_slices = cfg.reg.method == RegMethod::per && cfg.reg.lambda != 0.0;
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < n; start += cfg.batch_size) {
    const std::size_t count = std::min(cfg.batch_size, n - start);
    if (count < 2 && batches > 0) break;
    const std::span<const std::size_t> idx(order.data() + start, count);
    const Matrix x = gather_rows(data.features, idx);
    std::vector<int> y(count);
    for (std::size_t i = 0; i < count; ++i) y[i] = data.labels[idx[i]];

    const ForwardCache cache = forward(net, x);
    std::vector<SliceSet> slices;
    if (draw_slices) {
      for (std::size_t l = 0; l < net.hidden_count(); ++l) {
        RngStream rng = cfg.reg.seed.split(l, state.iteration);
        slices.push_back(SliceSet::sample(rng, cfg.reg.slices, cache.activations[l].cols()));
      }
    }
    const Gradients grads = backward(net, cache, y, cfg.reg, slices);
    const auto params = net.parameter_views();
    const auto gviews = grads.views();
    sgd_step(params, gviews, cfg.sgd(), state.sgd);
    loss_sum += grads.data_loss;
    ++batches;
    ++state.iteration;
  }
  return batches ? loss_sum / static_cast<double>(batches) : 0.0;
}

Evaluation evaluate(const Network& net, const LabeledData& data) {
  const ForwardCache c = forward(net, data.features);
  const LossResult loss = softmax_cross_entropy(c.logits, data.labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < c.logits.rows(); ++i) {
    const auto z = c.logits.row(i);
    const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    if (best == data.labels[i]) ++correct;
  }
  return {loss.loss, static_cast<double>(correct) / static_cast<double>(data.size())};
}

}  // namespace perreg
