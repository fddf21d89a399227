#include <sodium.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hinfer/network.hpp"
#include "json.hpp"

namespace hinfer {

using nlohmann::json;

u64 FixedPointCodec::from_signed(i64 v, u64 p) {
  const i64 ip = static_cast<i64>(p);
  i64 r = v % ip;
  if (r < 0) r += ip;
  return static_cast<u64>(r);
}

u64 FixedPointCodec::encode(double x) const {
  const double scaled = std::round(std::ldexp(x, scale_bits));
  if (!std::isfinite(scaled) || std::abs(scaled) > static_cast<double>(max_magnitude()))
    throw Error("fixed point: value out of range");
  return from_signed(static_cast<i64>(scaled), p);
}

double FixedPointCodec::decode(u64 v) const { return std::ldexp(static_cast<double>(to_signed(v, p)), -scale_bits); }

std::vector<u64> FixedPointCodec::encode(std::span<const double> xs) const {
  std::vector<u64> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(encode(x));
  return out;
}

std::vector<double> FixedPointCodec::decode(std::span<const u64> vs) const {
  std::vector<double> out;
  out.reserve(vs.size());
  for (u64 v : vs) out.push_back(decode(v));
  return out;
}

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::fc: return "fc";
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::square: return "square";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
  for (LayerKind k : {LayerKind::fc, LayerKind::conv, LayerKind::relu, LayerKind::maxpool, LayerKind::square})
    if (to_string(k) == s) return k;
  throw Error("unknown layer type: " + s);
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("network: " + what);
}

std::string b64_encode(std::span<const u64> v) {
  std::vector<u8> raw(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    require(v[i] <= 0xffffffffULL, "weight does not fit in 32 bits");
    const u32 x = static_cast<u32>(v[i]);
    std::memcpy(raw.data() + 4 * i, &x, 4);
  }
  const int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_ENCODED_LEN(raw.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), raw.data(), raw.size(), variant);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<u64> b64_decode(const std::string& s) {
  std::vector<u8> raw(s.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(raw.data(), raw.size(), s.data(), s.size(), nullptr, &len, nullptr, sodium_base64_VARIANT_ORIGINAL) != 0)
    throw Error("network: invalid base64 weights");
  require(len % 4 == 0, "weight array length is not a multiple of four bytes");
  std::vector<u64> out(len / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    u32 x;
    std::memcpy(&x, raw.data() + 4 * i, 4);
    out[i] = x;
  }
  return out;
}

std::string padding_name(Padding p) { return p == Padding::same ? "same" : "valid"; }

Padding padding_from(const std::string& s) {
  if (s == "same") return Padding::same;
  if (s == "valid") return Padding::valid;
  throw Error("network: unknown padding " + s);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

}  // namespace

std::vector<Shape> NetworkDescriptor::shapes() const {
  std::vector<Shape> out{input};
  for (const auto& l : layers) {
    Shape s = out.back();
    switch (l.kind) {
      case LayerKind::fc:
        require(l.n_i == s.size(), "fc input size does not match the previous layer");
        s = Shape{1, 1, l.n_o};
        break;
      case LayerKind::conv:
        require(l.conv.c_i == s.c && l.conv.h_i == s.h && l.conv.w_i == s.w, "conv input does not match the previous layer");
        l.conv.validate();
        s = Shape{l.conv.c_o, l.conv.h_o(), l.conv.w_o()};
        break;
      case LayerKind::maxpool:
        require(s.h % 2 == 0 && s.w % 2 == 0, "maxpool needs even height and width");
        s = Shape{s.c, s.h / 2, s.w / 2};
        break;
      case LayerKind::relu:
      case LayerKind::square:
        break;
    }
    out.push_back(s);
  }
  return out;
}

void NetworkDescriptor::validate() const {
  require(p >= 3 && p < (u64{1} << 31), "modulus out of range");
  require(input.size() > 0, "empty input");
  require(!layers.empty(), "no layers");
  require(input_scale_bits >= 0 && input_scale_bits < 31, "bad input scale");
  (void)shapes();
  const std::size_t width = static_cast<std::size_t>(std::bit_width(p - 1)) + 1;
  for (const auto& l : layers) {
    auto in_range = [&](const std::vector<u64>& v) {
      return std::all_of(v.begin(), v.end(), [&](u64 x) { return x < p; });
    };
    require(in_range(l.weights) && in_range(l.bias), "weights must be reduced mod p");
    switch (l.kind) {
      case LayerKind::fc:
        require(l.n_i > 0 && l.n_o > 0, "empty fc layer");
        require(l.weights.size() == l.n_i * l.n_o, "fc weight count mismatch");
        require(l.bias.empty() || l.bias.size() == l.n_o, "fc bias count mismatch");
        if (!l.method.empty()) (void)matvec_algorithm_from_string(l.method);
        break;
      case LayerKind::conv:
        require(l.weights.size() == l.conv.c_o * l.conv.c_i * l.conv.f_h * l.conv.f_w, "conv weight count mismatch");
        require(l.bias.empty() || l.bias.size() == l.conv.c_o, "conv bias count mismatch");
        if (!l.method.empty() && l.method != "auto") (void)conv_variant_from_string(l.method);
        break;
      case LayerKind::relu:
      case LayerKind::maxpool:
        require(l.shift < width, "shift exceeds the value width");
        require(l.weights.empty() && l.bias.empty(), "activation layers carry no weights");
        break;
      case LayerKind::square:
        require(l.shift == 0, "square layers cannot rescale");
        require(l.weights.empty() && l.bias.empty(), "activation layers carry no weights");
        break;
    }
  }
}

std::string NetworkDescriptor::to_json() const {
  json j;
  j["format"] = "hinfer-network";
  j["version"] = 1;
  j["name"] = name;
  j["modulus"] = p;
  j["input"] = {{"shape", {input.c, input.h, input.w}}, {"scale_bits", input_scale_bits}};
  json ls = json::array();
  for (const auto& l : layers) {
    json o;
    o["type"] = to_string(l.kind);
    switch (l.kind) {
      case LayerKind::fc:
        o["inputs"] = l.n_i;
        o["outputs"] = l.n_o;
        break;
      case LayerKind::conv:
        o["filters"] = l.conv.c_o;
        o["kernel"] = {l.conv.f_h, l.conv.f_w};
        o["stride"] = {l.conv.s_h, l.conv.s_w};
        o["padding"] = padding_name(l.conv.padding);
        break;
      case LayerKind::relu:
      case LayerKind::maxpool:
        o["shift"] = l.shift;
        break;
      case LayerKind::square:
        break;
    }
    if (l.linear()) {
      o["weights"] = b64_encode(l.weights);
      if (!l.bias.empty()) o["bias"] = b64_encode(l.bias);
      if (!l.method.empty()) o["method"] = l.method;
    }
    ls.push_back(o);
  }
  j["layers"] = ls;
  return j.dump(1);
}

NetworkDescriptor NetworkDescriptor::from_json(const std::string& text) {
  NetworkDescriptor net;
  try {
    const json j = json::parse(text);
    require(j.at("format") == "hinfer-network", "not a network descriptor");
    require(j.at("version") == 1, "unsupported descriptor version");
    net.name = j.value("name", "");
    net.p = j.at("modulus").get<u64>();
    const auto& in = j.at("input");
    const auto shape = in.at("shape").get<std::vector<std::size_t>>();
    require(shape.size() == 3, "input shape must be [c, h, w]");
    net.input = Shape{shape[0], shape[1], shape[2]};
    net.input_scale_bits = in.value("scale_bits", 0);
    Shape cur = net.input;
    for (const auto& o : j.at("layers")) {
      Layer l;
      l.kind = layer_kind_from_string(o.at("type").get<std::string>());
      switch (l.kind) {
        case LayerKind::fc:
          l.n_i = o.at("inputs").get<std::size_t>();
          l.n_o = o.at("outputs").get<std::size_t>();
          break;
        case LayerKind::conv: {
          const auto k = o.at("kernel").get<std::vector<std::size_t>>();
          const auto s = o.value("stride", std::vector<std::size_t>{1, 1});
          require(k.size() == 2 && s.size() == 2, "kernel and stride take two values");
          l.conv = ConvSpec{cur.w, cur.h, cur.c, k[1], k[0], o.at("filters").get<std::size_t>(), s[1], s[0],
                            padding_from(o.value("padding", "same"))};
          break;
        }
        case LayerKind::relu:
        case LayerKind::maxpool:
          l.shift = o.value("shift", 0u);
          break;
        case LayerKind::square:
          break;
      }
      if (l.linear()) {
        l.weights = b64_decode(o.at("weights").get<std::string>());
        if (o.contains("bias")) l.bias = b64_decode(o.at("bias").get<std::string>());
        l.method = o.value("method", "");
      }
      net.layers.push_back(std::move(l));
      NetworkDescriptor partial = net;
      cur = partial.shapes().back();
    }
  } catch (const json::exception& e) {
    throw Error(std::string("network: malformed descriptor: ") + e.what());
  }
  net.validate();
  return net;
}

void NetworkDescriptor::save(const std::string& path) const { write_file(path, to_json()); }

NetworkDescriptor NetworkDescriptor::load(const std::string& path) { return from_json(read_file(path)); }

u64 relu_mod(u64 x, u64 p, unsigned shift) {
  const i64 s = FixedPointCodec::to_signed(x, p);
  return s > 0 ? static_cast<u64>(s) >> shift : 0;
}

u64 maxpool_mod(std::span<const u64> window, u64 p, bool relu, unsigned shift) {
  i64 m = FixedPointCodec::to_signed(window[0], p);
  for (u64 v : window.subspan(1)) m = std::max(m, FixedPointCodec::to_signed(v, p));
  if (relu) m = std::max<i64>(m, 0);
  return FixedPointCodec::from_signed(m >> shift, p);
}

std::vector<std::vector<u64>> reference_trace(const NetworkDescriptor& net, std::span<const u64> input) {
  net.validate();
  const auto shapes = net.shapes();
  require(input.size() == net.input.size(), "input size does not match the network");
  const ModulusP mp(net.p);
  std::vector<std::vector<u64>> trace;
  std::vector<u64> x(input.begin(), input.end());
  for (u64 v : x) require(v < net.p, "input value outside [0, p)");
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& l = net.layers[li];
    const Shape& s = shapes[li];
    std::vector<u64> y;
    switch (l.kind) {
      case LayerKind::fc: {
        y.assign(l.n_o, 0);
        for (std::size_t r = 0; r < l.n_o; ++r) {
          u64 acc = l.bias.empty() ? 0 : l.bias[r];
          for (std::size_t c = 0; c < l.n_i; ++c) acc = mp.add(acc, mp.mul(l.weights[r * l.n_i + c], x[c]));
          y[r] = acc;
        }
        break;
      }
      case LayerKind::conv: {
        Tensor3 in{s.c, s.h, s.w, x};
        const Tensor3 out = conv_reference(ConvFilter{l.conv, l.weights}, in, mp);
        y = out.v;
        if (!l.bias.empty()) {
          const std::size_t plane = out.h * out.w;
          for (std::size_t i = 0; i < y.size(); ++i) y[i] = mp.add(y[i], l.bias[i / plane]);
        }
        break;
      }
      case LayerKind::relu:
        y.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = relu_mod(x[i], net.p, l.shift);
        break;
      case LayerKind::maxpool: {
        const std::size_t ho = s.h / 2, wo = s.w / 2;
        y.resize(s.c * ho * wo);
        for (std::size_t ch = 0; ch < s.c; ++ch)
          for (std::size_t oy = 0; oy < ho; ++oy)
            for (std::size_t ox = 0; ox < wo; ++ox) {
              const auto at = [&](std::size_t yy, std::size_t xx) { return x[(ch * s.h + yy) * s.w + xx]; };
              const std::array<u64, 4> win{at(2 * oy, 2 * ox), at(2 * oy, 2 * ox + 1), at(2 * oy + 1, 2 * ox),
                                           at(2 * oy + 1, 2 * ox + 1)};
              y[(ch * ho + oy) * wo + ox] = maxpool_mod(win, net.p, false, l.shift);
            }
        break;
      }
      case LayerKind::square:
        y.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = mp.mul(x[i], x[i]);
        break;
    }
    trace.push_back(y);
    x = std::move(y);
  }
  return trace;
}

std::vector<u64> reference_eval(const NetworkDescriptor& net, std::span<const u64> input) {
  return reference_trace(net, input).back();
}

namespace {

u64 random_weight(u64 p, i64 bound, Prg& prg) {
  const i64 v = static_cast<i64>(prg.uniform(static_cast<u64>(2 * bound + 1))) - bound;
  return FixedPointCodec::from_signed(v, p);
}

}  // namespace

Layer random_fc(std::size_t n_i, std::size_t n_o, u64 p, i64 bound, Prg& prg) {
  Layer l;
  l.kind = LayerKind::fc;
  l.n_i = n_i;
  l.n_o = n_o;
  l.weights.resize(n_i * n_o);
  for (auto& w : l.weights) w = random_weight(p, bound, prg);
  l.bias.resize(n_o);
  for (auto& b : l.bias) b = random_weight(p, bound, prg);
  return l;
}

Layer random_conv(const ConvSpec& spec, u64 p, i64 bound, Prg& prg) {
  spec.validate();
  Layer l;
  l.kind = LayerKind::conv;
  l.conv = spec;
  l.weights.resize(spec.c_o * spec.c_i * spec.f_h * spec.f_w);
  for (auto& w : l.weights) w = random_weight(p, bound, prg);
  l.bias.resize(spec.c_o);
  for (auto& b : l.bias) b = random_weight(p, bound, prg);
  return l;
}

Layer activation(LayerKind k, unsigned shift) {
  Layer l;
  l.kind = k;
  l.shift = shift;
  return l;
}

NetworkDescriptor network_a(u64 p, Prg& prg, std::size_t hidden) {
  NetworkDescriptor net;
  net.name = "A";
  net.p = p;
  net.input_scale_bits = 3;
  net.input = Shape{1, 28, 28};
  net.layers = {random_fc(784, hidden, p, 3, prg), activation(LayerKind::square), random_fc(hidden, hidden, p, 3, prg),
                activation(LayerKind::square), random_fc(hidden, 10, p, 3, prg)};
  net.validate();
  return net;
}

NetworkDescriptor network_d(u64 p, Prg& prg, std::size_t channels, std::size_t hidden) {
  NetworkDescriptor net;
  net.name = "D";
  net.p = p;
  net.input_scale_bits = 3;
  net.input = Shape{1, 28, 28};
  const ConvSpec c1{28, 28, 1, 5, 5, channels, 1, 1, Padding::valid};
  const ConvSpec c2{12, 12, channels, 5, 5, channels, 1, 1, Padding::valid};
  net.layers = {random_conv(c1, p, 3, prg),
                activation(LayerKind::relu),
                activation(LayerKind::maxpool, 3),
                random_conv(c2, p, 3, prg),
                activation(LayerKind::relu),
                activation(LayerKind::maxpool, 5),
                random_fc(channels * 16, hidden, p, 3, prg),
                activation(LayerKind::relu, 6),
                random_fc(hidden, 10, p, 3, prg)};
  net.validate();
  return net;
}

NetworkDescriptor identity_fc(u64 p, std::size_t n) {
  NetworkDescriptor net;
  net.name = "identity";
  net.p = p;
  net.input = Shape{1, 1, n};
  Layer l;
  l.kind = LayerKind::fc;
  l.n_i = l.n_o = n;
  l.weights.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) l.weights[i * n + i] = 1;
  net.layers = {l};
  net.validate();
  return net;
}

std::vector<u64> random_image(const Shape& s, int scale_bits, u64 p, Prg& prg) {
  std::vector<u64> v(s.size());
  for (auto& x : v) x = prg.uniform((u64{1} << scale_bits) + 1) % p;
  return v;
}

std::vector<u64> load_input(const std::string& path, const NetworkDescriptor& net) {
  try {
    const json j = json::parse(read_file(path));
    std::vector<u64> out;
    if (j.contains("fixed")) {
      for (const auto& v : j.at("fixed")) out.push_back(FixedPointCodec::from_signed(v.get<i64>(), net.p));
    } else {
      const auto real = j.at("real").get<std::vector<double>>();
      out = FixedPointCodec{net.p, net.input_scale_bits}.encode(real);
    }
    require(out.size() == net.input.size(), "input has " + std::to_string(out.size()) + " values, the network expects " +
                                                std::to_string(net.input.size()));
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed input file: ") + e.what());
  }
}

std::vector<i64> load_signed_input(const std::string& path, int scale_bits) {
  try {
    const json j = json::parse(read_file(path));
    if (j.contains("fixed")) return j.at("fixed").get<std::vector<i64>>();
    const int bits = j.value("scale_bits", scale_bits);
    require(bits >= 0 && bits < 40, "input scale_bits out of range");
    std::vector<i64> out;
    for (double x : j.at("real").get<std::vector<double>>()) {
      require(std::isfinite(x), "input value is not finite");
      out.push_back(static_cast<i64>(std::llround(std::ldexp(x, bits))));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed input file: ") + e.what());
  }
}

void save_input(const std::string& path, std::span<const u64> values, u64 p) {
  json j;
  std::vector<i64> fixed;
  for (u64 v : values) fixed.push_back(FixedPointCodec::to_signed(v, p));
  j["fixed"] = fixed;
  write_file(path, j.dump());
}

}  // namespace hinfer
