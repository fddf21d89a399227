#pragma once

#include <span>
#include <string>
#include <vector>

#include "hinfer/conv.hpp"
#include "hinfer/modarith.hpp"

namespace hinfer {

// Signed fixed-point values embedded in Zp, negatives in (p/2, p).
struct FixedPointCodec {
  u64 p = 0;
  int scale_bits = 0;

  i64 max_magnitude() const { return static_cast<i64>(p / 2); }
  static i64 to_signed(u64 v, u64 p) { return v > p / 2 ? static_cast<i64>(v) - static_cast<i64>(p) : static_cast<i64>(v); }
  static u64 from_signed(i64 v, u64 p);
  // Rounds x * 2^scale_bits; throws when the result leaves the signed range.
  u64 encode(double x) const;
  double decode(u64 v) const;
  std::vector<u64> encode(std::span<const double> xs) const;
  std::vector<double> decode(std::span<const u64> vs) const;
};

struct Shape {
  std::size_t c = 1, h = 1, w = 1;
  std::size_t size() const { return c * h * w; }
  bool operator==(const Shape&) const = default;
};

enum class LayerKind { fc, conv, relu, maxpool, square };

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct Layer {
  LayerKind kind = LayerKind::fc;
  // fc: n_o x n_i row-major weights over the flattened input, n_o biases.
  std::size_t n_i = 0, n_o = 0;
  // conv: spec dims match the incoming shape; c_o biases.
  ConvSpec conv;
  std::vector<u64> weights;
  std::vector<u64> bias;
  // relu and maxpool: arithmetic right shift applied to the result.
  unsigned shift = 0;
  // fc: matvec algorithm name; conv: variant name or "auto".
  std::string method;

  bool linear() const { return kind == LayerKind::fc || kind == LayerKind::conv; }
  bool operator==(const Layer&) const = default;
};

struct NetworkDescriptor {
  std::string name;
  u64 p = 0;
  int input_scale_bits = 0;
  Shape input;
  std::vector<Layer> layers;

  // Shape entering each layer, plus the final output shape.
  std::vector<Shape> shapes() const;
  // Throws Error on incompatible dims, out-of-range weights or bad options.
  void validate() const;

  std::string to_json() const;
  static NetworkDescriptor from_json(const std::string& text);
  void save(const std::string& path) const;
  static NetworkDescriptor load(const std::string& path);
  bool operator==(const NetworkDescriptor&) const = default;
};

// Plain fixed-point evaluation over Zp, the ground truth for secure runs.
// Returns the values after every layer; back() is the network output.
std::vector<std::vector<u64>> reference_trace(const NetworkDescriptor& net, std::span<const u64> input);
std::vector<u64> reference_eval(const NetworkDescriptor& net, std::span<const u64> input);

// Activation semantics shared with the garbled circuits.
u64 relu_mod(u64 x, u64 p, unsigned shift);
u64 maxpool_mod(std::span<const u64> window, u64 p, bool relu, unsigned shift);

// Random quantized weights in [-bound, bound].
Layer random_fc(std::size_t n_i, std::size_t n_o, u64 p, i64 bound, Prg& prg);
Layer random_conv(const ConvSpec& spec, u64 p, i64 bound, Prg& prg);
Layer activation(LayerKind k, unsigned shift = 0);

// Three FC layers with square activations on a 28x28 input.
NetworkDescriptor network_a(u64 p, Prg& prg, std::size_t hidden = 128);
// Two convolutions with ReLU and 2x2 max pooling, then two FC layers.
NetworkDescriptor network_d(u64 p, Prg& prg, std::size_t channels = 5, std::size_t hidden = 32);
NetworkDescriptor identity_fc(u64 p, std::size_t n);

// Random image with pixels in [0, 2^scale_bits].
std::vector<u64> random_image(const Shape& s, int scale_bits, u64 p, Prg& prg);

std::vector<u64> load_input(const std::string& path, const NetworkDescriptor& net);
// Signed fixed-point values without a network at hand; "real" entries are
// scaled by the file's scale_bits, or `scale_bits` when the file has none.
std::vector<i64> load_signed_input(const std::string& path, int scale_bits = 0);
void save_input(const std::string& path, std::span<const u64> values, u64 p);

}  // namespace hinfer
