#pragma once

// Denoiser-architecture MLPs. The same network type serves as the pretrained
// teacher, the fake-score network and the one-step generator; the generator
// is the denoiser evaluated at the fixed noise level sigma_init on input
// sigma_init * z.

#include <cstddef>
#include <span>
#include <vector>

#include "sid/autodiff.hpp"
#include "sid/rng.hpp"
#include "sid/tensor.hpp"

namespace sid::nn {

struct NetworkConfig {
  std::size_t data_dim = 2;
  std::size_t hidden_width = 128;
  std::size_t depth = 3;
  double sigma_data = 0.5;
  std::size_t time_embed_dim = 16;

  void validate() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// One affine layer inside the flat parameter array: weight (in x out,
/// row-major) immediately followed by bias (1 x out).
struct LayerSlice {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;

  std::size_t weight_size() const { return in * out; }
  std::size_t bias_offset() const { return offset + in * out; }
  std::size_t end() const { return offset + in * out + out; }
  friend bool operator==(const LayerSlice&, const LayerSlice&) = default;
};

std::vector<LayerSlice> layout_for(const NetworkConfig& config);
std::size_t parameter_count(const NetworkConfig& config);

/// Flat parameter store plus the layer layout it was built for.
class NetworkParams {
 public:
  NetworkParams() = default;
  NetworkParams(NetworkConfig config, std::vector<double> values);

  /// Fan-in scaled normal weights, zero biases.
  static NetworkParams random(const NetworkConfig& config, Rng& rng);
  static NetworkParams zeros(const NetworkConfig& config);

  const NetworkConfig& config() const { return config_; }
  const std::vector<LayerSlice>& layers() const { return layers_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::size_t size() const { return values_.size(); }

  Tensor weight(std::size_t layer) const;
  Tensor bias(std::size_t layer) const;

  friend bool operator==(const NetworkParams& a, const NetworkParams& b) {
    return a.config_ == b.config_ && a.values_ == b.values_;
  }

 private:
  NetworkConfig config_;
  std::vector<LayerSlice> layers_;
  std::vector<double> values_;
};

/// Sinusoidal features of c_noise = ln(sigma) / 4, one row per sigma.
Tensor time_embedding(std::span<const double> sigma, std::size_t dim);

/// Whether attached weights are graph parameters or frozen constants.
enum class Role { Trainable, Frozen };

/// Output node of a model appended to a graph, plus the parameter leaves it
/// created (in flat-array order).
struct Attached {
  ad::Var output;
  std::vector<ad::Var> leaves;
};

/// A differentiable f(x_t, sigma) that can be appended to any graph.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual std::size_t data_dim() const = 0;
  /// `sigma` holds one noise level per row of x_t.
  virtual Attached attach(ad::Graph& graph, ad::Var x_t, std::span<const double> sigma,
                          Role role) const = 0;
};

/// A differentiable x_g = G(z) that can be appended to any graph.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::size_t data_dim() const = 0;
  virtual Attached attach(ad::Graph& graph, const Tensor& z, Role role) const = 0;
};

/// Concatenates the gradients of `attached.leaves` into one flat vector.
std::vector<double> flatten_gradient(const ad::Gradients& grads, const Attached& attached);

/// c_skip x + c_out F(c_in x, embed(c_noise)) with an MLP F.
class MlpDenoiser final : public Denoiser {
 public:
  explicit MlpDenoiser(const NetworkParams& params) : params_(&params) {}
  std::size_t data_dim() const override { return params_->config().data_dim; }
  Attached attach(ad::Graph& graph, ad::Var x_t, std::span<const double> sigma,
                  Role role) const override;
  const NetworkParams& params() const { return *params_; }

 private:
  const NetworkParams* params_;
};

/// G(z) = denoise(params, sigma_init z, sigma_init).
class MlpGenerator final : public Generator {
 public:
  MlpGenerator(const NetworkParams& params, double sigma_init)
      : params_(&params), sigma_init_(sigma_init) {}
  std::size_t data_dim() const override { return params_->config().data_dim; }
  Attached attach(ad::Graph& graph, const Tensor& z, Role role) const override;

 private:
  const NetworkParams* params_;
  double sigma_init_;
};

/// Forward pass with one sigma per row.
Tensor denoise(const NetworkParams& params, const Tensor& x_t, std::span<const double> sigma);
/// Forward pass with one sigma shared by all rows.
Tensor denoise(const NetworkParams& params, const Tensor& x_t, double sigma);

/// (denoise - x_t) / sigma^2.
Tensor score(const NetworkParams& params, const Tensor& x_t, double sigma);

Tensor generate(const NetworkParams& theta, const Tensor& z, double sigma_init);

/// upstream^T d denoise / d x_t with the network weights frozen.
Tensor input_gradient_pullback(const NetworkParams& params, const Tensor& x_t,
                               std::span<const double> sigma, const Tensor& upstream);

/// Generic forward pass through any Denoiser, returning the output tensor.
Tensor evaluate(const Denoiser& model, const Tensor& x_t, std::span<const double> sigma);
Tensor evaluate(const Generator& model, const Tensor& z);

}  // namespace sid::nn
