#include "armrl/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "armrl/error.hpp"
#include "armrl/random.hpp"

namespace armrl::nn {

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "linear";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "linear" || s.empty()) return Activation::kNone;
  throw ConfigError("unknown activation '" + s + "'");
}

Var activate(Var x, Activation a) {
  switch (a) {
    case Activation::kNone: return x;
    case Activation::kRelu: return relu(x);
    case Activation::kTanh: return tanh(x);
  }
  return x;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

// Walks the trunk and reports each layer's weight shape; shared by
// validate() and init() so they cannot disagree.
struct LayerShapes {
  std::vector<Shape> weights;
  int trunk_out = 0;
};

LayerShapes layer_shapes(const Architecture& arch) {
  LayerShapes out;
  Shape cur = arch.input;
  if (cur.empty()) throw ConfigError("architecture has no input shape");
  for (int d : cur) {
    if (d <= 0) throw ConfigError("input dimensions must be positive");
  }
  for (const LayerSpec& l : arch.trunk) {
    if (l.units <= 0) throw ConfigError("layer width must be positive");
    if (l.kind == LayerSpec::Kind::kConv) {
      if (cur.size() != 3) throw ConfigError("conv layer needs a CxHxW input, got " + shape_string(cur));
      if (l.kernel <= 0 || l.stride <= 0) throw ConfigError("conv kernel and stride must be positive");
      if (l.kernel > cur[1] || l.kernel > cur[2]) throw ConfigError("conv kernel larger than its input");
      out.weights.push_back(Shape{l.units, cur[0], l.kernel, l.kernel});
      cur = Shape{l.units, (cur[1] - l.kernel) / l.stride + 1, (cur[2] - l.kernel) / l.stride + 1};
    } else {
      const int in = static_cast<int>(shape_size(cur));
      out.weights.push_back(Shape{l.units, in});
      cur = Shape{l.units};
    }
  }
  out.trunk_out = static_cast<int>(shape_size(cur));
  if (arch.heads.empty()) throw ConfigError("architecture needs at least one head");
  for (int h : arch.heads) {
    if (h <= 0) throw ConfigError("head size must be positive");
    out.weights.push_back(Shape{h, out.trunk_out});
  }
  return out;
}

}  // namespace

void Architecture::validate() const { layer_shapes(*this); }

std::string Architecture::to_string() const {
  std::ostringstream os;
  os << "input";
  for (int d : input) os << ' ' << d;
  for (const LayerSpec& l : trunk) {
    if (l.kind == LayerSpec::Kind::kConv) {
      os << " | conv " << l.units << ' ' << l.kernel << ' ' << l.stride << ' ' << activation_name(l.activation);
    } else {
      os << " | dense " << l.units << ' ' << activation_name(l.activation);
    }
  }
  for (int h : heads) os << " | head " << h;
  return os.str();
}

Architecture Architecture::parse(const std::string& text) {
  Architecture arch;
  std::istringstream fields(text);
  std::string field;
  bool first = true;
  while (std::getline(fields, field, '|')) {
    std::istringstream is(trim(field));
    std::string kind;
    is >> kind;
    auto bad = [&] { return ConfigError("malformed architecture field '" + trim(field) + "'"); };
    if (first != (kind == "input")) throw bad();
    first = false;
    if (kind == "input") {
      int d;
      while (is >> d) arch.input.push_back(d);
      if (!is.eof()) throw bad();
    } else if (kind == "conv" || kind == "dense") {
      LayerSpec l;
      std::string act;
      if (kind == "conv") {
        l.kind = LayerSpec::Kind::kConv;
        if (!(is >> l.units >> l.kernel >> l.stride)) throw bad();
      } else if (!(is >> l.units)) {
        throw bad();
      }
      is >> act;
      l.activation = parse_activation(act);
      arch.trunk.push_back(l);
    } else if (kind == "head") {
      int h;
      if (!(is >> h)) throw bad();
      arch.heads.push_back(h);
    } else {
      throw bad();
    }
  }
  arch.validate();
  return arch;
}

Architecture Architecture::image_net(std::vector<int> heads) {
  Architecture a;
  a.input = {3, 60, 80};
  a.trunk = {{LayerSpec::Kind::kConv, 8, 5, 2, Activation::kRelu},
             {LayerSpec::Kind::kConv, 16, 3, 2, Activation::kRelu},
             {LayerSpec::Kind::kDense, 128, 0, 1, Activation::kRelu}};
  a.heads = std::move(heads);
  return a;
}

Architecture Architecture::feature_net(int inputs, std::vector<int> heads) {
  Architecture a;
  a.input = {inputs};
  a.trunk = {{LayerSpec::Kind::kDense, 64, 0, 1, Activation::kRelu},
             {LayerSpec::Kind::kDense, 64, 0, 1, Activation::kRelu}};
  a.heads = std::move(heads);
  return a;
}

Network Network::init(const Architecture& arch, std::uint64_t seed) {
  const LayerShapes shapes = layer_shapes(arch);
  Network net;
  net.arch_ = arch;
  Rng rng(seed);
  const std::size_t n_trunk = arch.trunk.size();
  for (std::size_t i = 0; i < shapes.weights.size(); ++i) {
    const Shape& ws = shapes.weights[i];
    const bool head = i >= n_trunk;
    const std::string prefix = head ? "head" + std::to_string(i - n_trunk) : "layer" + std::to_string(i);
    const int fan_in = static_cast<int>(shape_size(ws) / static_cast<std::size_t>(ws[0]));
    const double bound = head ? 3e-3 : std::sqrt(6.0 / fan_in);
    Tensor w(ws);
    for (double& x : w.values()) x = uniform_real(rng, -bound, bound);
    net.params_.push_back({prefix + ".weight", std::move(w), Tensor(ws)});
    net.params_.push_back({prefix + ".bias", Tensor(Shape{ws[0]}), Tensor(Shape{ws[0]})});
  }
  return net;
}

Parameter& Network::parameter(const std::string& name) {
  for (Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw UsageError("no parameter named '" + name + "'");
}

const Parameter& Network::parameter(const std::string& name) const {
  return const_cast<Network*>(this)->parameter(name);
}

std::size_t Network::num_values() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

std::vector<Var> Network::forward(Tape& tape, const Tensor& input, bool track_grads) const {
  return forward(tape, tape.constant(input), track_grads);
}

std::vector<Var> Network::forward(Tape& tape, Var input, bool track_grads) const {
  Shape expect = arch_.input;
  const Shape& got = input.shape();
  if (got.size() != expect.size() + 1 || !std::equal(expect.begin(), expect.end(), got.begin() + 1)) {
    throw ShapeError("network expects [B," + shape_string(expect).substr(1) + " input, got " + shape_string(got));
  }
  std::size_t k = 0;
  auto next = [&]() {
    Parameter& p = params_[k++];
    return track_grads ? tape.leaf(p.value, &p.grad) : tape.constant(p.value);
  };
  Var x = input;
  for (const LayerSpec& l : arch_.trunk) {
    Var w = next();
    Var b = next();
    if (l.kind == LayerSpec::Kind::kConv) {
      x = conv2d(x, w, b, l.stride);
    } else {
      if (x.value().rank() != 2) x = flatten(x);
      x = dense(x, w, b);
    }
    x = activate(x, l.activation);
  }
  if (x.value().rank() != 2) x = flatten(x);
  std::vector<Var> outs;
  for (std::size_t h = 0; h < arch_.heads.size(); ++h) {
    Var w = next();
    Var b = next();
    outs.push_back(dense(x, w, b));
  }
  return outs;
}

std::vector<Tensor> Network::predict(const Tensor& input) const {
  Tape tape;
  std::vector<Tensor> out;
  for (Var v : forward(tape, input, false)) out.push_back(v.value());
  return out;
}

void Network::zero_grad() {
  for (Parameter& p : params_) {
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    p.grad.fill(0.0);
  }
}

double Network::clip_grad_norm(double max_norm) {
  double sq = 0.0;
  for (const Parameter& p : params_) {
    for (double g : p.grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (Parameter& p : params_) {
      for (double& g : p.grad.values()) g *= k;
    }
  }
  return norm;
}

void Network::copy_from(const Network& other) {
  if (!(arch_ == other.arch_)) throw ShapeError("copy_from: architectures differ");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = other.params_[i].value;
}

void Network::blend_from(const Network& other, double rho) {
  if (!(arch_ == other.arch_)) throw ShapeError("blend_from: architectures differ");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& dst = params_[i].value;
    const Tensor& src = other.params_[i].value;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = rho * src[k] + (1.0 - rho) * dst[k];
  }
}

bool Network::same_values(const Network& other) const {
  if (!(arch_ == other.arch_) || params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name || !(params_[i].value == other.params_[i].value)) return false;
  }
  return true;
}

AdamState make_adam(const Network& net, AdamConfig cfg) {
  AdamState s;
  s.config = cfg;
  for (const Parameter& p : net.parameters()) {
    s.m.emplace_back(p.value.shape());
    s.v.emplace_back(p.value.shape());
  }
  return s;
}

void adam_step(Network& net, AdamState& state) {
  auto& params = net.parameters();
  if (state.m.size() != params.size()) throw ShapeError("adam state does not match network");
  const AdamConfig& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params[i].value;
    const Tensor& g = params[i].grad;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    if (g.shape() != w.shape() || m.shape() != w.shape()) throw ShapeError("adam: shape mismatch for " + params[i].name);
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

namespace {

constexpr char kMagic[8] = {'A', 'R', 'M', 'R', 'L', 'N', 'N', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_unsigned_v<T>);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("checkpoint truncated");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get_le<std::uint32_t>(is);
  if (n > (1u << 20)) throw FormatError("checkpoint string too long");
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw FormatError("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(os, kVersion);
  put_string(os, net.architecture().to_string());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.parameters().size()));
  for (const Parameter& p : net.parameters()) {
    put_string(os, p.name);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.value.rank()));
    for (int d : p.value.shape()) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (double x : p.value.values()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(x));
  }
  if (!os) throw Error("failed writing " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + " is not a network checkpoint");
  }
  const auto version = get_le<std::uint32_t>(is);
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Architecture arch;
  try {
    arch = Architecture::parse(get_string(is));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint descriptor: ") + e.what());
  }
  Network net = Network::init(arch, 0);
  const auto count = get_le<std::uint32_t>(is);
  if (count != net.parameters().size()) throw FormatError("checkpoint parameter count does not match descriptor");
  for (Parameter& p : net.parameters()) {
    if (get_string(is) != p.name) throw FormatError("checkpoint parameter order does not match descriptor");
    const auto rank = get_le<std::uint32_t>(is);
    Shape shape;
    for (std::uint32_t i = 0; i < rank && i < 8; ++i) shape.push_back(static_cast<int>(get_le<std::uint32_t>(is)));
    if (shape != p.value.shape()) throw FormatError("checkpoint shape mismatch for " + p.name);
    for (double& x : p.value.values()) x = std::bit_cast<double>(get_le<std::uint64_t>(is));
  }
  return net;
}

}  // namespace armrl::nn
