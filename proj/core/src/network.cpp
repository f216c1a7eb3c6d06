#include "sid/network.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sid/diffusion.hpp"

namespace sid::nn {

void NetworkConfig::validate() const {
  if (data_dim == 0) throw std::invalid_argument("network data_dim must be positive");
  if (hidden_width == 0) throw std::invalid_argument("network hidden_width must be positive");
  if (depth == 0) throw std::invalid_argument("network depth must be at least 1");
  if (!(sigma_data > 0.0)) throw std::invalid_argument("network sigma_data must be positive");
}

std::vector<LayerSlice> layout_for(const NetworkConfig& config) {
  config.validate();
  std::vector<LayerSlice> layers;
  std::size_t offset = 0;
  std::size_t in = config.data_dim + config.time_embed_dim;
  for (std::size_t i = 0; i <= config.depth; ++i) {
    const std::size_t out = i == config.depth ? config.data_dim : config.hidden_width;
    layers.push_back({in, out, offset});
    offset = layers.back().end();
    in = out;
  }
  return layers;
}

std::size_t parameter_count(const NetworkConfig& config) { return layout_for(config).back().end(); }

NetworkParams::NetworkParams(NetworkConfig config, std::vector<double> values)
    : config_(config), layers_(layout_for(config)), values_(std::move(values)) {
  if (values_.size() != layers_.back().end()) {
    throw std::invalid_argument("network parameter length " + std::to_string(values_.size()) +
                                " does not match layout length " +
                                std::to_string(layers_.back().end()));
  }
  if (!all_finite(values_)) throw NonFiniteError("network parameters contain non-finite values");
}

NetworkParams NetworkParams::zeros(const NetworkConfig& config) {
  return NetworkParams(config, std::vector<double>(parameter_count(config), 0.0));
}

NetworkParams NetworkParams::random(const NetworkConfig& config, Rng& rng) {
  NetworkParams p = zeros(config);
  for (const LayerSlice& layer : p.layers_) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t i = 0; i < layer.weight_size(); ++i) {
      p.values_[layer.offset + i] = scale * rng.normal();
    }
  }
  return p;
}

Tensor NetworkParams::weight(std::size_t layer) const {
  const LayerSlice& s = layers_.at(layer);
  const auto first = values_.begin() + static_cast<std::ptrdiff_t>(s.offset);
  return Tensor(s.in, s.out,
                std::vector<double>(first, first + static_cast<std::ptrdiff_t>(s.weight_size())));
}

Tensor NetworkParams::bias(std::size_t layer) const {
  const LayerSlice& s = layers_.at(layer);
  const auto first = values_.begin() + static_cast<std::ptrdiff_t>(s.bias_offset());
  return Tensor(1, s.out, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(s.out)));
}

Tensor time_embedding(std::span<const double> sigma, std::size_t dim) {
  Tensor out(sigma.size(), dim);
  if (dim == 0) return out;
  const std::size_t n_freq = (dim + 1) / 2;
  // Frequencies log-spaced over [1, 32] cover c_noise in roughly [-1.6, 1.1].
  std::vector<double> freq(n_freq);
  for (std::size_t k = 0; k < n_freq; ++k) {
    const double frac = n_freq == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n_freq - 1);
    freq[k] = std::exp(frac * std::log(32.0));
  }
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double c_noise = std::log(sigma[i]) / 4.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double arg = freq[j / 2] * c_noise;
      out(i, j) = j % 2 == 0 ? std::sin(arg) : std::cos(arg);
    }
  }
  return out;
}

std::vector<double> flatten_gradient(const ad::Gradients& grads, const Attached& attached) {
  std::vector<double> flat;
  for (ad::Var leaf : attached.leaves) {
    const Tensor& g = grads[leaf];
    flat.insert(flat.end(), g.data().begin(), g.data().end());
  }
  return flat;
}

Attached MlpDenoiser::attach(ad::Graph& graph, ad::Var x_t, std::span<const double> sigma,
                             Role role) const {
  const NetworkParams& p = *params_;
  const NetworkConfig& cfg = p.config();
  const Tensor& x = graph.value(x_t);
  if (x.cols() != cfg.data_dim) {
    throw ShapeError("denoiser expects " + std::to_string(cfg.data_dim) + " columns, got " +
                     std::to_string(x.cols()));
  }
  if (sigma.size() != x.rows()) throw ShapeError("denoiser needs one sigma per row");

  Tensor c_skip(x.rows(), 1), c_out(x.rows(), 1), c_in(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!(sigma[i] > 0.0)) throw std::domain_error("denoiser: sigma must be positive");
    const auto c = diffusion::precondition_coeffs(sigma[i], cfg.sigma_data);
    c_skip[i] = c.c_skip;
    c_out[i] = c.c_out;
    c_in[i] = c.c_in;
  }

  Attached result;
  auto leaf = [&](Tensor value, std::string name) {
    if (role == Role::Trainable) {
      const ad::Var v = graph.parameter(std::move(value), std::move(name));
      result.leaves.push_back(v);
      return v;
    }
    return graph.constant(std::move(value), std::move(name));
  };

  ad::Var h = graph.row_scale(x_t, graph.constant(std::move(c_in), "c_in"));
  if (cfg.time_embed_dim > 0) {
    h = graph.concat(h, graph.constant(time_embedding(sigma, cfg.time_embed_dim), "embedding"));
  }
  const std::size_t n_layers = p.layers().size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const ad::Var w = leaf(p.weight(l), "W" + std::to_string(l));
    const ad::Var b = leaf(p.bias(l), "b" + std::to_string(l));
    h = graph.affine(h, w, b);
    if (l + 1 < n_layers) h = graph.silu(h);
  }
  const ad::Var skip = graph.row_scale(x_t, graph.constant(std::move(c_skip), "c_skip"));
  const ad::Var residual = graph.row_scale(h, graph.constant(std::move(c_out), "c_out"));
  result.output = graph.add(skip, residual);
  return result;
}

Attached MlpGenerator::attach(ad::Graph& graph, const Tensor& z, Role role) const {
  Tensor input(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.size(); ++i) input[i] = sigma_init_ * z[i];
  const ad::Var x = graph.constant(std::move(input), "sigma_init*z");
  const std::vector<double> sigma(z.rows(), sigma_init_);
  return MlpDenoiser(*params_).attach(graph, x, sigma, role);
}

Tensor evaluate(const Denoiser& model, const Tensor& x_t, std::span<const double> sigma) {
  ad::Graph graph;
  const ad::Var x = graph.constant(x_t, "x_t");
  const Attached out = model.attach(graph, x, sigma, Role::Frozen);
  return graph.value(out.output);
}

Tensor evaluate(const Generator& model, const Tensor& z) {
  ad::Graph graph;
  const Attached out = model.attach(graph, z, Role::Frozen);
  return graph.value(out.output);
}

Tensor denoise(const NetworkParams& params, const Tensor& x_t, std::span<const double> sigma) {
  return evaluate(MlpDenoiser(params), x_t, sigma);
}

Tensor denoise(const NetworkParams& params, const Tensor& x_t, double sigma) {
  const std::vector<double> s(x_t.rows(), sigma);
  return denoise(params, x_t, s);
}

Tensor score(const NetworkParams& params, const Tensor& x_t, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("score: sigma must be positive");
  Tensor out = denoise(params, x_t, sigma);
  const double inv = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - x_t[i]) * inv;
  out.check_finite("score");
  return out;
}

Tensor generate(const NetworkParams& theta, const Tensor& z, double sigma_init) {
  return evaluate(MlpGenerator(theta, sigma_init), z);
}

Tensor input_gradient_pullback(const NetworkParams& params, const Tensor& x_t,
                               std::span<const double> sigma, const Tensor& upstream) {
  ad::Graph graph;
  const ad::Var x = graph.parameter(x_t, "x_t");
  const Attached out = MlpDenoiser(params).attach(graph, x, sigma, Role::Frozen);
  const ad::Gradients grads = graph.backward(out.output, upstream);
  return grads[x];
}

}  // namespace sid::nn
