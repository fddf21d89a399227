#include <algorithm>
#include <stdexcept>

#include "hinfer/conv.hpp"

namespace hinfer {

namespace {

struct Hoisted {
  std::vector<HoistedCiphertext> parts;
  int w_pt = 0;
};

Hoisted decompose(const WindowedCiphertext& in, int w_relin, const Evaluator& ev, ConvOpCount& ops) {
  Hoisted h;
  h.w_pt = in.w_pt;
  for (const auto& part : in.parts) h.parts.push_back(ev.perm_decomp(part, w_relin));
  ++ops.perm_decomp;
  return h;
}

WindowedCiphertext rotate(const Hoisted& h, const PermutationKey& key, const Evaluator& ev, ConvOpCount& ops) {
  WindowedCiphertext out;
  out.w_pt = h.w_pt;
  for (const auto& part : h.parts) out.parts.push_back(ev.perm_auto(part, key));
  ++ops.perm;
  return out;
}

void accumulate(Ciphertext& acc, const WindowedCiphertext& in, const PlaintextWindows& pt, const Evaluator& ev, ConvOpCount& ops) {
  if (pt.zero) return;
  ev.add_inplace(acc, ev.scmult(in, pt));
  ++ops.scmult;
  ++ops.add;
}

bool is_center(const ConvGeometry::Tap& t) { return t.ty == 0 && t.tx == 0; }

ConvResult padded(const EncodedFilter& enc, const WindowedCiphertext& in, const KeyRing& keys, const Evaluator& ev, Prg& prg) {
  ConvResult res;
  const auto& geo = enc.geo;
  const Hoisted h = decompose(in, enc.opt.w_relin, ev, res.ops);
  Ciphertext acc = ev.zero();
  for (std::size_t t = 0; t < geo.taps.size(); ++t) {
    if (enc.tap_perms[t].is_identity()) {
      accumulate(acc, in, enc.plains[t], ev, res.ops);
    } else {
      accumulate(acc, rotate(h, keys.get(enc.tap_perms[t], enc.opt.w_relin), ev, res.ops), enc.plains[t], ev, res.ops);
    }
  }
  const u64 p = ev.context().p().value();
  std::vector<u64> mask(geo.n, 0);
  std::vector<bool> keep(geo.n, false);
  for (std::size_t y = 0; y < geo.h_o; ++y)
    for (std::size_t x = 0; x < geo.w_o; ++x) keep[geo.output_slot(0, y, x).second] = true;
  for (std::size_t s = 0; s < geo.n; ++s)
    if (!keep[s]) mask[s] = prg.uniform(p);
  res.cts.push_back(ev.add_plain(acc, mask));
  return res;
}

ConvResult input_rotation(const EncodedFilter& enc, const std::vector<WindowedCiphertext>& in, const KeyRing& keys,
                          const Evaluator& ev) {
  ConvResult res;
  const auto& geo = enc.geo;
  res.cts.assign(geo.out_cts, ev.zero());
  for (std::size_t i = 0; i < geo.in_cts; ++i) {
    const Hoisted h = decompose(in[i], enc.opt.w_relin, ev, res.ops);
    for (std::size_t g = 0; g < enc.group.size(); ++g)
      for (std::size_t t = 0; t < geo.taps.size(); ++t) {
        WindowedCiphertext rotated;
        const bool identity = g == 0 && is_center(geo.taps[t]);
        if (!identity) rotated = rotate(h, keys.get(conv_perm(geo, enc.group[g], geo.taps[t]), enc.opt.w_relin), ev, res.ops);
        const WindowedCiphertext& src = identity ? in[i] : rotated;
        for (std::size_t o = 0; o < geo.out_cts; ++o) accumulate(res.cts[o], src, enc.plains[enc.plain_index(o, i, g, t)], ev, res.ops);
      }
  }
  return res;
}

ConvResult output_rotation(const EncodedFilter& enc, const std::vector<WindowedCiphertext>& in, const KeyRing& keys,
                           const Evaluator& ev) {
  ConvResult res;
  const auto& geo = enc.geo;
  res.cts.assign(geo.out_cts, ev.zero());
  for (std::size_t i = 0; i < geo.in_cts; ++i) {
    const Hoisted h = decompose(in[i], enc.opt.w_relin, ev, res.ops);
    std::vector<WindowedCiphertext> rotated(geo.taps.size());
    for (std::size_t t = 0; t < geo.taps.size(); ++t)
      if (!is_center(geo.taps[t])) rotated[t] = rotate(h, keys.get(enc.tap_perms[t], enc.opt.w_relin), ev, res.ops);
    for (std::size_t o = 0; o < geo.out_cts; ++o)
      for (std::size_t g = 0; g < enc.group.size(); ++g) {
        Ciphertext acc = ev.zero();
        for (std::size_t t = 0; t < geo.taps.size(); ++t)
          accumulate(acc, is_center(geo.taps[t]) ? in[i] : rotated[t], enc.plains[enc.plain_index(o, i, g, t)], ev, res.ops);
        if (g > 0) {
          acc = ev.perm(acc, keys.get(enc.group[g], enc.opt.w_relin));
          ++res.ops.perm_decomp;
          ++res.ops.perm;
        }
        ev.add_inplace(res.cts[o], acc);
        ++res.ops.add;
      }
  }
  return res;
}

}  // namespace

ConvResult conv(const EncodedFilter& enc, const std::vector<WindowedCiphertext>& in, const KeyRing& keys, const Evaluator& ev,
                Prg& prg) {
  const auto& geo = enc.geo;
  if (geo.n != ev.context().n()) throw std::invalid_argument("conv: encoding does not match the context");
  if (in.size() != geo.in_cts) throw std::invalid_argument("conv: wrong number of input ciphertexts");
  std::size_t parts = 0;
  for (const auto& pt : enc.plains) parts = std::max(parts, pt.chunks.size());
  for (const auto& ct : in)
    if (ct.parts.size() < std::max<std::size_t>(parts, 1)) throw std::invalid_argument("conv: missing window ciphertexts");

  ConvResult res;
  switch (geo.variant) {
    case ConvVariant::padded_siso:
      res = padded(enc, in[0], keys, ev, prg);
      break;
    case ConvVariant::packed_siso:
    case ConvVariant::one_per_ct:
    case ConvVariant::input_rotation:
      res = input_rotation(enc, in, keys, ev);
      break;
    case ConvVariant::output_rotation:
      res = output_rotation(enc, in, keys, ev);
      break;
  }
  res.ops.out_cts = res.cts.size();
  return res;
}

}  // namespace hinfer
