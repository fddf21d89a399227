#include <algorithm>
#include <stdexcept>

#include "hinfer/conv.hpp"

namespace hinfer {

namespace {

// Original filter tap for lowered input channel `ch` and lowered tap t, or
// false when the tap lies outside the filter.
bool original_tap(const ConvSpec& s, const ConvGeometry& geo, std::size_t ch, const ConvGeometry::Tap& t, std::size_t& c,
                  std::size_t& dy, std::size_t& dx) {
  const std::size_t phase = ch % geo.phases;
  c = ch / geo.phases;
  const long a = static_cast<long>(phase / geo.s_w), b = static_cast<long>(phase % geo.s_w);
  const bool same = s.padding == Padding::same;
  const long ph = same ? static_cast<long>(s.f_h - 1) / 2 : 0;
  const long pw = same ? static_cast<long>(s.f_w - 1) / 2 : 0;
  const long y = t.ty * static_cast<long>(geo.s_h) + a + ph;
  const long x = t.tx * static_cast<long>(geo.s_w) + b + pw;
  if (y < 0 || x < 0 || y >= static_cast<long>(s.f_h) || x >= static_cast<long>(s.f_w)) return false;
  dy = static_cast<std::size_t>(y);
  dx = static_cast<std::size_t>(x);
  return true;
}

// Value multiplying slot x of the rotated input (o, i, g, t) in the input
// rotation layout.
u64 input_rotation_entry(const ConvFilter& f, const ConvGeometry& geo, const Context& ctx, const PermId& g, std::size_t o,
                         std::size_t i, const ConvGeometry::Tap& t, std::size_t x) {
  const std::size_t pix = x % geo.block;
  const std::size_t py = pix / geo.w, px = pix % geo.w;
  if (pix >= geo.h * geo.w || py >= geo.h_o || px >= geo.w_o) return 0;
  const long sy = static_cast<long>(py) + t.ty, sx = static_cast<long>(px) + t.tx;
  if (sy < 0 || sx < 0 || sy >= static_cast<long>(geo.h) || sx >= static_cast<long>(geo.w)) return 0;
  const std::size_t oc = o * geo.c_n + (x / geo.block) % geo.c_n;
  const std::size_t ic = i * geo.c_n + (ctx.slot_source(x, g) / geo.block) % geo.c_n;
  if (oc >= geo.c_out || ic >= geo.c_in) return 0;
  std::size_t c = 0, dy = 0, dx = 0;
  if (!original_tap(f.spec, geo, ic, t, c, dy, dx)) return 0;
  return f.at(oc, c, dy, dx);
}

}  // namespace

std::vector<u64> conv_plaintext(const ConvFilter& f, const ConvGeometry& geo, const Context& ctx, std::size_t o, std::size_t i,
                                std::size_t g, std::size_t t) {
  const std::size_t n = ctx.n();
  if (geo.n != n) throw std::invalid_argument("conv: geometry does not match the context");
  std::vector<u64> out(n, 0);
  const ConvGeometry::Tap& tap = geo.taps.at(t);
  if (geo.variant == ConvVariant::padded_siso) {
    std::fill(out.begin(), out.end(), f.at(0, 0, static_cast<std::size_t>(tap.ty), static_cast<std::size_t>(tap.tx)));
    return out;
  }
  const PermId gid = conv_group(geo).at(g);
  if (geo.variant == ConvVariant::output_rotation) {
    for (std::size_t x = 0; x < n; ++x) out[ctx.slot_source(x, gid)] = input_rotation_entry(f, geo, ctx, gid, o, i, tap, x);
  } else {
    for (std::size_t x = 0; x < n; ++x) out[x] = input_rotation_entry(f, geo, ctx, gid, o, i, tap, x);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> EncodedFilter::grouping(std::size_t o, std::size_t i, std::size_t g) const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t half = geo.n / 2;
  for (std::size_t l = 0; l < geo.c_n; ++l) {
    const std::size_t x = l * geo.block;
    const std::size_t src = ((x / half) ^ (group[g].swap ? 1 : 0)) * half + (x % half + group[g].rot) % half;
    const std::size_t oc = o * geo.c_n + l;
    const std::size_t ic = i * geo.c_n + (src / geo.block) % geo.c_n;
    if (oc < geo.c_out && ic < geo.c_in) out.emplace_back(oc, ic);
  }
  return out;
}

EncodedFilter encode_filter(const ConvFilter& f, ConvVariant v, const ConvOptions& opt, const Evaluator& ev) {
  const Context& ctx = ev.context();
  if (f.w.size() != f.spec.c_o * f.spec.c_i * f.spec.f_h * f.spec.f_w) throw std::invalid_argument("conv: filter size mismatch");
  EncodedFilter enc;
  enc.spec = f.spec;
  enc.geo = conv_geometry(f.spec, v, ctx.n(), opt.c_n);
  enc.opt = opt;
  enc.group = conv_group(enc.geo);
  for (const auto& t : enc.geo.taps) enc.tap_perms.push_back(conv_perm(enc.geo, PermId{}, t));

  const std::size_t outs = v == ConvVariant::padded_siso ? 1 : enc.geo.out_cts;
  const std::size_t ins = v == ConvVariant::padded_siso ? 1 : enc.geo.in_cts;
  const std::size_t taps = enc.geo.taps.size();
  enc.plains.resize(outs * ins * enc.group.size() * taps);
  for (std::size_t o = 0; o < outs; ++o)
    for (std::size_t i = 0; i < ins; ++i)
      for (std::size_t g = 0; g < enc.group.size(); ++g)
        for (std::size_t t = 0; t < taps; ++t) {
          const auto slots = conv_plaintext(f, enc.geo, ctx, o, i, g, t);
          PlaintextWindows& pw = enc.plains[enc.plain_index(o, i, g, t)];
          if (std::all_of(slots.begin(), slots.end(), [](u64 s) { return s == 0; })) {
            pw.w_pt = opt.w_pt;
            pw.zero = true;
          } else {
            pw = ev.encode_windows(slots, opt.w_pt);
          }
        }
  return enc;
}

std::vector<PermId> required_perms(const EncodedFilter& enc) {
  std::vector<PermId> out;
  auto add = [&](const PermId& id) {
    if (!id.is_identity() && std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  };
  const auto& geo = enc.geo;
  if (geo.variant == ConvVariant::output_rotation) {
    for (const auto& p : enc.tap_perms) add(p);
    for (const auto& g : enc.group) add(g);
  } else {
    for (const auto& g : enc.group)
      for (const auto& t : geo.taps) add(conv_perm(geo, g, t));
  }
  return out;
}

}  // namespace hinfer
