#include <algorithm>
#include <bit>
#include <stdexcept>

#include "hinfer/conv.hpp"

namespace hinfer {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("conv: ") + what);
}

}  // namespace

std::size_t ConvSpec::w_o() const { return padding == Padding::same ? w_i / s_w : (w_i - f_w) / s_w + 1; }
std::size_t ConvSpec::h_o() const { return padding == Padding::same ? h_i / s_h : (h_i - f_h) / s_h + 1; }

void ConvSpec::validate() const {
  require(w_i > 0 && h_i > 0 && c_i > 0 && c_o > 0, "empty image or channel count");
  require(f_w > 0 && f_h > 0, "empty filter");
  require(s_w > 0 && s_h > 0, "zero stride");
  if (padding == Padding::same) {
    require(f_w % 2 == 1 && f_h % 2 == 1, "same padding needs odd filter dimensions");
    require(w_i >= s_w && h_i >= s_h, "stride larger than the image");
  } else {
    require(f_w <= w_i && f_h <= h_i, "filter larger than the image");
  }
}

Tensor3 Tensor3::zeros(std::size_t c, std::size_t h, std::size_t w) { return Tensor3{c, h, w, std::vector<u64>(c * h * w, 0)}; }

Tensor3 Tensor3::random(std::size_t c, std::size_t h, std::size_t w, u64 p, Prg& prg) {
  Tensor3 t = zeros(c, h, w);
  for (auto& x : t.v) x = prg.uniform(p);
  return t;
}

ConvFilter ConvFilter::zeros(const ConvSpec& spec) {
  return ConvFilter{spec, std::vector<u64>(spec.c_o * spec.c_i * spec.f_h * spec.f_w, 0)};
}

ConvFilter ConvFilter::random(const ConvSpec& spec, u64 p, Prg& prg) {
  ConvFilter f = zeros(spec);
  for (auto& x : f.w) x = prg.uniform(p);
  return f;
}

Tensor3 conv_reference(const ConvFilter& f, const Tensor3& in, const ModulusP& p) {
  const ConvSpec& s = f.spec;
  s.validate();
  require(in.c == s.c_i && in.h == s.h_i && in.w == s.w_i, "input does not match the filter");
  const long ph = s.padding == Padding::same ? static_cast<long>(s.f_h - 1) / 2 : 0;
  const long pw = s.padding == Padding::same ? static_cast<long>(s.f_w - 1) / 2 : 0;
  Tensor3 out = Tensor3::zeros(s.c_o, s.h_o(), s.w_o());
  for (std::size_t o = 0; o < s.c_o; ++o)
    for (std::size_t y = 0; y < out.h; ++y)
      for (std::size_t x = 0; x < out.w; ++x) {
        u64 acc = 0;
        for (std::size_t i = 0; i < s.c_i; ++i)
          for (std::size_t dy = 0; dy < s.f_h; ++dy)
            for (std::size_t dx = 0; dx < s.f_w; ++dx) {
              const long sy = static_cast<long>(y * s.s_h + dy) - ph;
              const long sx = static_cast<long>(x * s.s_w + dx) - pw;
              if (sy < 0 || sx < 0 || sy >= static_cast<long>(s.h_i) || sx >= static_cast<long>(s.w_i)) continue;
              acc = p.add(acc, p.mul(f.at(o, i, dy, dx), in.at(i, sy, sx)));
            }
        out.at(o, y, x) = acc;
      }
  return out;
}

std::string to_string(ConvVariant v) {
  switch (v) {
    case ConvVariant::padded_siso: return "padded_siso";
    case ConvVariant::packed_siso: return "packed_siso";
    case ConvVariant::one_per_ct: return "one_per_ct";
    case ConvVariant::input_rotation: return "input_rotation";
    case ConvVariant::output_rotation: return "output_rotation";
  }
  return "?";
}

ConvVariant conv_variant_from_string(const std::string& s) {
  for (auto v : {ConvVariant::padded_siso, ConvVariant::packed_siso, ConvVariant::one_per_ct, ConvVariant::input_rotation,
                 ConvVariant::output_rotation})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown convolution variant: " + s);
}

std::pair<std::size_t, std::size_t> ConvGeometry::input_slot(std::size_t ch, std::size_t y, std::size_t x) const {
  if (variant == ConvVariant::padded_siso) return {0, (y + pad_top) * w + x + pad_left};
  return {ch / c_n, (ch % c_n) * block + y * w + x};
}

std::pair<std::size_t, std::size_t> ConvGeometry::output_slot(std::size_t ch, std::size_t y, std::size_t x) const {
  if (variant == ConvVariant::padded_siso) return {0, y * w + x};
  return {ch / c_n, (ch % c_n) * block + y * w + x};
}

ConvGeometry conv_geometry(const ConvSpec& spec, ConvVariant v, std::size_t n, std::size_t c_n) {
  spec.validate();
  ConvGeometry g;
  g.variant = v;
  g.n = n;
  g.h_o = spec.h_o();
  g.w_o = spec.w_o();
  g.c_out = spec.c_o;
  const bool same = spec.padding == Padding::same;

  if (v == ConvVariant::padded_siso) {
    require(spec.c_i == 1 && spec.c_o == 1, "padded SISO takes one input and one output channel");
    require(spec.s_w == 1 && spec.s_h == 1, "padded SISO is unstrided");
    g.pad_top = same ? (spec.f_h - 1) / 2 : 0;
    g.pad_left = same ? (spec.f_w - 1) / 2 : 0;
    g.pad_h = spec.h_i + 2 * g.pad_top;
    g.pad_w = spec.w_i + 2 * g.pad_left;
    require(g.pad_h * g.pad_w <= n / 2, "padded image does not fit in half a ciphertext");
    g.h = g.pad_h;
    g.w = g.pad_w;
    g.c_in = 1;
    g.block = n / 2;
    g.in_cts = g.out_cts = 1;
    for (std::size_t dy = 0; dy < spec.f_h; ++dy)
      for (std::size_t dx = 0; dx < spec.f_w; ++dx) g.taps.push_back({static_cast<long>(dy), static_cast<long>(dx)});
    return g;
  }

  if (v == ConvVariant::packed_siso) {
    require(spec.c_i == 1 && spec.c_o == 1, "packed SISO takes one input and one output channel");
    require(spec.s_w == 1 && spec.s_h == 1, "packed SISO is unstrided");
  }
  g.s_h = spec.s_h;
  g.s_w = spec.s_w;
  g.phases = spec.s_h * spec.s_w;
  g.h = ceil_div(spec.h_i, spec.s_h);
  g.w = ceil_div(spec.w_i, spec.s_w);
  g.c_in = spec.c_i * g.phases;
  g.block = std::bit_ceil(g.h * g.w);
  require(g.block <= n / 2, "image does not fit in half a ciphertext");

  const long ph = same ? static_cast<long>(spec.f_h - 1) / 2 : 0;
  const long pw = same ? static_cast<long>(spec.f_w - 1) / 2 : 0;
  for (std::size_t dy = 0; dy < spec.f_h; ++dy)
    for (std::size_t dx = 0; dx < spec.f_w; ++dx) {
      const ConvGeometry::Tap t{floor_div(static_cast<long>(dy) - ph, static_cast<long>(spec.s_h)),
                                floor_div(static_cast<long>(dx) - pw, static_cast<long>(spec.s_w))};
      const bool seen = std::any_of(g.taps.begin(), g.taps.end(), [&](const auto& u) { return u.ty == t.ty && u.tx == t.tx; });
      if (!seen) g.taps.push_back(t);
    }
  std::sort(g.taps.begin(), g.taps.end(), [](const auto& a, const auto& b) { return a.ty != b.ty ? a.ty < b.ty : a.tx < b.tx; });
  for (const auto& t : g.taps)
    require(std::abs(t.ty) < static_cast<long>(g.h) && std::abs(t.tx) < static_cast<long>(g.w), "filter reaches past the image");

  if (v != ConvVariant::input_rotation && v != ConvVariant::output_rotation) {
    g.c_n = 1;
  } else if (c_n == 0) {
    g.c_n = std::min({n / g.block, std::bit_ceil(g.c_in), std::bit_ceil(spec.c_o)});
  } else {
    require(std::has_single_bit(c_n) && c_n * g.block <= n, "channels per ciphertext must be a power of two that fits");
    g.c_n = c_n;
  }
  g.in_cts = ceil_div(g.c_in, g.c_n);
  g.out_cts = ceil_div(spec.c_o, g.c_n);
  return g;
}

ConvCount conv_counts(const ConvSpec& spec, ConvVariant v, std::size_t n, std::size_t c_n) {
  const ConvGeometry g = conv_geometry(spec, v, n, c_n);
  const u64 t = g.taps.size();
  const u64 in = g.in_cts, out = g.out_cts, cn = g.c_n;
  switch (v) {
    case ConvVariant::padded_siso:
    case ConvVariant::packed_siso:
    case ConvVariant::one_per_ct:
    case ConvVariant::input_rotation:
      return ConvCount{in, (cn * t - 1) * in, in, out};
    case ConvVariant::output_rotation:
      return ConvCount{(1 + (cn - 1) * out) * in, (t - 1 + (cn - 1) * out) * in, in, out};
  }
  return {};
}

ConvVariant choose_variant(const ConvSpec& spec, std::size_t n, double auto_over_decomp) {
  const ConvGeometry g = conv_geometry(spec, ConvVariant::input_rotation, n);
  const double t = static_cast<double>(g.taps.size());
  const double cn = static_cast<double>(g.c_n);
  const double out = static_cast<double>(g.out_cts);
  return (t - 1) * (cn - 1) > (cn - 1) * out * auto_over_decomp ? ConvVariant::output_rotation : ConvVariant::input_rotation;
}

std::vector<PermId> conv_group(const ConvGeometry& geo) {
  const std::size_t half = geo.n / 2;
  std::vector<PermId> out;
  for (std::size_t j = 0; j < geo.c_n; ++j) {
    const std::size_t a = j * geo.block;
    out.push_back(PermId{static_cast<u32>(a % half), a >= half});
  }
  return out;
}

PermId conv_perm(const ConvGeometry& geo, const PermId& g, const ConvGeometry::Tap& t) {
  const long half = static_cast<long>(geo.n / 2);
  const long shift = t.ty * static_cast<long>(geo.w) + t.tx;
  const long rot = ((static_cast<long>(g.rot) + shift) % half + half) % half;
  return PermId{static_cast<u32>(rot), g.swap};
}

std::vector<std::vector<u64>> pack_conv_input(const ConvGeometry& geo, const Tensor3& in, u64 p) {
  const std::size_t c_orig = geo.c_in / geo.phases;
  require(in.c == c_orig, "input channel count does not match");
  std::vector<std::vector<u64>> cts(geo.in_cts, std::vector<u64>(geo.n, 0));
  if (geo.variant == ConvVariant::padded_siso) {
    for (std::size_t y = 0; y < in.h; ++y)
      for (std::size_t x = 0; x < in.w; ++x) cts[0][geo.input_slot(0, y, x).second] = in.at(0, y, x) % p;
    return cts;
  }
  const std::size_t s_h = geo.s_h, s_w = geo.s_w;
  const std::size_t period = geo.c_n * geo.block;
  for (std::size_t c = 0; c < c_orig; ++c)
    for (std::size_t a = 0; a < s_h; ++a)
      for (std::size_t b = 0; b < s_w; ++b) {
        const std::size_t ch = c * geo.phases + a * s_w + b;
        for (std::size_t u = 0; u < geo.h; ++u)
          for (std::size_t v = 0; v < geo.w; ++v) {
            const std::size_t y = u * s_h + a, x = v * s_w + b;
            if (y >= in.h || x >= in.w) continue;
            const auto [ct, slot] = geo.input_slot(ch, u, v);
            for (std::size_t rep = slot; rep < geo.n; rep += period) cts[ct][rep] = in.at(c, y, x) % p;
          }
      }
  return cts;
}

Tensor3 unpack_conv_output(const ConvGeometry& geo, const std::vector<std::vector<u64>>& cts, std::size_t c_o) {
  require(cts.size() >= geo.out_cts, "missing output ciphertexts");
  Tensor3 out = Tensor3::zeros(c_o, geo.h_o, geo.w_o);
  for (std::size_t c = 0; c < c_o; ++c)
    for (std::size_t y = 0; y < geo.h_o; ++y)
      for (std::size_t x = 0; x < geo.w_o; ++x) {
        const auto [ct, slot] = geo.output_slot(c, y, x);
        out.at(c, y, x) = cts[ct][slot];
      }
  return out;
}

}  // namespace hinfer
