#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "armrl/autodiff.hpp"
#include "armrl/tensor.hpp"

namespace armrl::nn {

enum class Activation { kNone, kRelu, kTanh };

struct LayerSpec {
  enum class Kind { kConv, kDense };
  Kind kind = Kind::kDense;
  int units = 0;  // output features, or filters for conv
  int kernel = 0;
  int stride = 1;
  Activation activation = Activation::kRelu;

  bool operator==(const LayerSpec&) const = default;
};

/// Layer stack description. Text form, one item per '|'-separated field:
///   input 3 60 80 | conv 8 5 2 relu | conv 16 3 2 relu | dense 128 relu | head 10 | head 1
/// Every head is a linear layer applied to the trunk output.
struct Architecture {
  Shape input;  // per-sample shape, without the batch dimension
  std::vector<LayerSpec> trunk;
  std::vector<int> heads;

  /// Throws ConfigError when the layer sizes do not chain.
  void validate() const;
  std::string to_string() const;
  static Architecture parse(const std::string& text);

  /// 3x60x80 input, two strided convolutions, dense 128.
  static Architecture image_net(std::vector<int> heads);
  /// Two dense 64 hidden layers.
  static Architecture feature_net(int inputs, std::vector<int> heads);

  bool operator==(const Architecture&) const = default;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

class Network {
 public:
  Network() = default;
  /// He-uniform hidden layers, uniform(+-3e-3) heads, zero biases.
  static Network init(const Architecture& arch, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(const std::string& name);
  const Parameter& parameter(const std::string& name) const;
  std::size_t num_values() const;

  /// input: [B, ...architecture().input]. Returns one Var per head.
  /// With track_grads, backward() accumulates into each Parameter::grad.
  std::vector<Var> forward(Tape& tape, const Tensor& input, bool track_grads = true) const;
  std::vector<Var> forward(Tape& tape, Var input, bool track_grads = true) const;
  /// Tape-free convenience: head values for `input`.
  std::vector<Tensor> predict(const Tensor& input) const;

  void zero_grad();
  /// Global L2 norm of all gradients; rescales them when it exceeds max_norm.
  double clip_grad_norm(double max_norm);
  void copy_from(const Network& other);
  /// this := rho * other + (1 - rho) * this.
  void blend_from(const Network& other, double rho);

  bool same_values(const Network& other) const;

 private:
  Architecture arch_;
  // mutable: forward() hands out grad sinks on a const network.
  mutable std::vector<Parameter> params_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

AdamState make_adam(const Network& net, AdamConfig cfg);
/// One bias-corrected Adam update from the gradients stored in `net`.
void adam_step(Network& net, AdamState& state);

/// Versioned binary container: descriptor text then named little-endian
/// float64 arrays. Round trips are bit-exact.
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace armrl::nn
