#pragma once

#include <string>
#include <vector>

#include "hinfer/linalg.hpp"
#include "hinfer/pahe.hpp"

namespace hinfer {

enum class Padding { same, valid };

struct ConvSpec {
  std::size_t w_i = 0, h_i = 0, c_i = 0;
  std::size_t f_w = 0, f_h = 0, c_o = 0;
  std::size_t s_w = 1, s_h = 1;
  Padding padding = Padding::same;

  std::size_t w_o() const;
  std::size_t h_o() const;
  // Throws std::invalid_argument on empty dims, even filters with same
  // padding or filters larger than a valid-padded image.
  void validate() const;
  bool operator==(const ConvSpec&) const = default;
};

// Channel-major image, values in Zp.
struct Tensor3 {
  std::size_t c = 0, h = 0, w = 0;
  std::vector<u64> v;

  static Tensor3 zeros(std::size_t c, std::size_t h, std::size_t w);
  static Tensor3 random(std::size_t c, std::size_t h, std::size_t w, u64 p, Prg& prg);
  u64& at(std::size_t ch, std::size_t y, std::size_t x) { return v[(ch * h + y) * w + x]; }
  u64 at(std::size_t ch, std::size_t y, std::size_t x) const { return v[(ch * h + y) * w + x]; }
  bool operator==(const Tensor3&) const = default;
};

// c_o filter banks of c_i x f_h x f_w taps.
struct ConvFilter {
  ConvSpec spec;
  std::vector<u64> w;

  static ConvFilter zeros(const ConvSpec& spec);
  static ConvFilter random(const ConvSpec& spec, u64 p, Prg& prg);
  u64& at(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) {
    return w[((o * spec.c_i + i) * spec.f_h + dy) * spec.f_w + dx];
  }
  u64 at(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) const {
    return w[((o * spec.c_i + i) * spec.f_h + dy) * spec.f_w + dx];
  }
};

// Direct multi-channel convolution mod p.
Tensor3 conv_reference(const ConvFilter& f, const Tensor3& in, const ModulusP& p);

enum class ConvVariant { padded_siso, packed_siso, one_per_ct, input_rotation, output_rotation };

std::string to_string(ConvVariant v);
ConvVariant conv_variant_from_string(const std::string& s);

// Strided convolutions are lowered to stride one over s_h*s_w phase images
// per input channel: channel c*s_h*s_w + a*s_w + b holds in[c][s_h*u + a][s_w*v + b].
struct ConvGeometry {
  ConvVariant variant = ConvVariant::input_rotation;
  std::size_t n = 0;
  std::size_t s_h = 1, s_w = 1;
  std::size_t phases = 1;
  std::size_t h = 0, w = 0;        // lowered image
  std::size_t h_o = 0, w_o = 0;    // output image, stored with row stride w
  std::size_t c_in = 0;            // lowered input channels
  std::size_t c_out = 0;
  std::size_t block = 0;           // slots per channel
  std::size_t c_n = 1;             // channels per ciphertext
  std::size_t in_cts = 0, out_cts = 0;
  struct Tap {
    long ty = 0, tx = 0;
  };
  std::vector<Tap> taps;
  // Padded SISO only: padded image and offset of pixel (0, 0).
  std::size_t pad_h = 0, pad_w = 0, pad_top = 0, pad_left = 0;

  // Ciphertext and slot holding lowered input channel ch at pixel (y, x).
  std::pair<std::size_t, std::size_t> input_slot(std::size_t ch, std::size_t y, std::size_t x) const;
  std::pair<std::size_t, std::size_t> output_slot(std::size_t ch, std::size_t y, std::size_t x) const;
};

// c_n = 0 packs as many channels per ciphertext as fit; otherwise c_n is a
// power of two used as given.
ConvGeometry conv_geometry(const ConvSpec& spec, ConvVariant v, std::size_t n, std::size_t c_n = 0);

struct ConvCount {
  u64 perm_decomp = 0;
  u64 perm = 0;
  u64 in_cts = 0;
  u64 out_cts = 0;
  bool operator==(const ConvCount&) const = default;
};

// Closed forms on the lowered geometry (c_i*s_h*s_w channels, one tap per
// distinct lowered offset).
ConvCount conv_counts(const ConvSpec& spec, ConvVariant v, std::size_t n, std::size_t c_n = 0);

// Default cost of a hoisted automorphism relative to a decomposition.
inline constexpr double kPermAutoOverDecomp = 35.0 / 231.0;

// Output rotations iff (T-1)(c_n-1) > (c_n-1)(c_o/c_n)*ratio; ties and
// single-channel packing go to input rotations.
ConvVariant choose_variant(const ConvSpec& spec, std::size_t n, double auto_over_decomp = kPermAutoOverDecomp);

struct ConvOptions {
  int w_pt = 10;
  int w_relin = 5;
  std::size_t c_n = 0;
};

struct EncodedFilter {
  ConvSpec spec;
  ConvGeometry geo;
  ConvOptions opt;
  std::vector<PermId> group;                 // channel rotations, group[0] is the identity
  std::vector<PermId> tap_perms;             // per tap
  // Input rotation: plains[((o*in_cts + i)*c_n + g)*T + t] multiplies the
  // input ciphertext i rotated by compose(group[g], tap t).
  // Output rotation: same index, multiplies the tap rotation before the
  // channel rotation group[g].
  // Padded SISO: one constant plaintext per tap.
  std::vector<PlaintextWindows> plains;     // all-zero plaintexts are left empty
  // Pairs (output channel, lowered input channel) combined in the
  // intermediate ciphertext of (o, i, g); used for structural checks.
  std::vector<std::pair<std::size_t, std::size_t>> grouping(std::size_t o, std::size_t i, std::size_t g) const;
  std::size_t plain_index(std::size_t o, std::size_t i, std::size_t g, std::size_t t) const {
    return ((o * geo.in_cts + i) * group.size() + g) * geo.taps.size() + t;
  }
};

// Channel rotations: amount j*block for j < c_n.
std::vector<PermId> conv_group(const ConvGeometry& geo);
// Combined input rotation for group element g and tap t.
PermId conv_perm(const ConvGeometry& geo, const PermId& g, const ConvGeometry::Tap& t);
// Slot vector of plaintext (o, i, g, t) before windowing; zero wherever the
// output pixel or the tap source falls outside the image.
std::vector<u64> conv_plaintext(const ConvFilter& f, const ConvGeometry& geo, const Context& ctx, std::size_t o, std::size_t i,
                                std::size_t g, std::size_t t);

EncodedFilter encode_filter(const ConvFilter& f, ConvVariant v, const ConvOptions& opt, const Evaluator& ev);
std::vector<PermId> required_perms(const EncodedFilter& enc);

std::vector<std::vector<u64>> pack_conv_input(const ConvGeometry& geo, const Tensor3& in, u64 p);
Tensor3 unpack_conv_output(const ConvGeometry& geo, const std::vector<std::vector<u64>>& cts, std::size_t c_o);

struct ConvOpCount {
  u64 perm_decomp = 0;
  u64 perm = 0;
  u64 scmult = 0;
  u64 add = 0;
  u64 out_cts = 0;
};

struct ConvResult {
  std::vector<Ciphertext> cts;
  ConvOpCount ops;
};

// Inputs are windowed encryptions of pack_conv_input. Slots outside the
// output image are randomized for padded SISO and hold convolution values or
// zero for the packed variants.
ConvResult conv(const EncodedFilter& enc, const std::vector<WindowedCiphertext>& in, const KeyRing& keys, const Evaluator& ev,
                Prg& prg);

}  // namespace hinfer
