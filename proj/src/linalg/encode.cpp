#include <algorithm>
#include <bit>
#include <stdexcept>

#include "hinfer/linalg.hpp"
#include "layout.hpp"

namespace hinfer {

std::string to_string(MatvecAlgorithm a) {
  switch (a) {
    case MatvecAlgorithm::naive: return "naive";
    case MatvecAlgorithm::output_packed: return "output_packed";
    case MatvecAlgorithm::input_packed: return "input_packed";
    case MatvecAlgorithm::diagonal: return "diagonal";
    case MatvecAlgorithm::hybrid: return "hybrid";
  }
  return "?";
}

MatvecAlgorithm matvec_algorithm_from_string(const std::string& s) {
  for (auto a : {MatvecAlgorithm::naive, MatvecAlgorithm::output_packed, MatvecAlgorithm::input_packed, MatvecAlgorithm::diagonal, MatvecAlgorithm::hybrid})
    if (to_string(a) == s) return a;
  throw Error("unknown matvec algorithm: " + s);
}

WeightMatrix WeightMatrix::zeros(std::size_t n_o, std::size_t n_i) {
  WeightMatrix m;
  m.n_o = n_o;
  m.n_i = n_i;
  m.w.assign(n_o * n_i, 0);
  return m;
}

WeightMatrix WeightMatrix::random(std::size_t n_o, std::size_t n_i, u64 p, Prg& prg) {
  WeightMatrix m = zeros(n_o, n_i);
  for (auto& v : m.w) v = prg.uniform(p);
  return m;
}

std::vector<u64> WeightMatrix::apply(std::span<const u64> v, const ModulusP& p) const {
  if (v.size() != n_i) throw std::invalid_argument("apply: vector length differs from n_i");
  std::vector<u64> out(n_o, 0);
  for (std::size_t r = 0; r < n_o; ++r) {
    u64 acc = bias.empty() ? 0 : p.reduce(bias[r]);
    for (std::size_t c = 0; c < n_i; ++c) acc = p.add(acc, p.mul(at(r, c), p.reduce(v[c])));
    out[r] = acc;
  }
  return out;
}

namespace {

std::size_t log2_exact(std::size_t x) { return static_cast<std::size_t>(std::countr_zero(x)); }

}  // namespace

OpCount count_ops(MatvecAlgorithm a, std::size_t n, std::size_t n_i, std::size_t n_o) {
  linalg_detail::check_shape(a, n, n_i, n_o);
  const u64 li = log2_exact(n_i);
  OpCount c;
  switch (a) {
    case MatvecAlgorithm::naive:
      c.perm = n_o * li;
      c.scmult = n_o;
      c.add = n_o * li;
      c.output_cts = n_o;
      break;
    case MatvecAlgorithm::output_packed:
      c.perm = n_o * li + n_o - 1;
      c.scmult = 2 * n_o;
      c.add = n_o * li + n_o;
      c.output_cts = 1;
      break;
    case MatvecAlgorithm::input_packed: {
      const u64 cts = linalg_detail::packed_cts(n, n_i, n_o);
      c.perm = cts * li;
      c.scmult = cts;
      c.add = cts * li;
      c.output_cts = cts;
      break;
    }
    case MatvecAlgorithm::diagonal:
      c.perm_hoisted = n_i - 1;
      c.scmult = n_i;
      c.add = n_i;
      c.output_cts = 1;
      break;
    case MatvecAlgorithm::hybrid: {
      const auto h = linalg_detail::hybrid_shape(n, n_i, n_o);
      c.perm_hoisted = h.k - 1;
      c.perm = log2_exact(h.n_eff / n_o);
      c.scmult = h.k;
      c.add = h.k + c.perm;
      c.output_cts = 1;
      break;
    }
  }
  return c;
}

MatvecOptions default_options(MatvecAlgorithm a) {
  switch (a) {
    case MatvecAlgorithm::naive:
    case MatvecAlgorithm::input_packed: return {20, 7};
    case MatvecAlgorithm::output_packed: return {2, 2};
    case MatvecAlgorithm::diagonal:
    case MatvecAlgorithm::hybrid: return {10, 5};
  }
  return {};
}

namespace linalg_detail {

void check_shape(MatvecAlgorithm a, std::size_t n, std::size_t n_i, std::size_t n_o) {
  if (!std::has_single_bit(n_i) || !std::has_single_bit(n_o)) throw Error("matrix dimensions must be powers of two");
  if (n_o > n || n_i > n) throw Error("matrix dimensions exceed the slot count");
  if (a == MatvecAlgorithm::input_packed && n_i >= n) throw Error("input packing needs n_i < n");
  if (a == MatvecAlgorithm::hybrid && n_o > n_i) throw Error("hybrid needs n_o <= n_i");
}

std::size_t packed_cts(std::size_t n, std::size_t n_i, std::size_t n_o) {
  const std::size_t copies = n / n_i;
  return (n_o + copies - 1) / copies;
}

HybridShape hybrid_shape(std::size_t n, std::size_t n_i, std::size_t n_o) {
  HybridShape h;
  h.n_eff = std::min(n, n_o * n_i);
  h.k = n_o * n_i / h.n_eff;
  return h;
}

PermId amount_to_perm(std::size_t amount, std::size_t n) {
  const std::size_t half = n / 2;
  return PermId{static_cast<u32>(amount % half), amount >= half};
}

std::vector<PermId> rotate_and_sum(std::size_t from, std::size_t down_to, std::size_t n) {
  std::vector<PermId> out;
  for (std::size_t a = from / 2; a >= down_to && a >= 1; a /= 2) out.push_back(amount_to_perm(a, n));
  return out;
}

PermId placement(std::size_t i, std::size_t n) {
  const std::size_t half = n / 2;
  const std::size_t j = i % half;
  return PermId{static_cast<u32>((half - j) % half), i >= half};
}

std::vector<int> input_layout(MatvecAlgorithm a, std::size_t n, std::size_t n_i, std::size_t n_o) {
  std::vector<int> lay(n, -1);
  switch (a) {
    case MatvecAlgorithm::naive:
    case MatvecAlgorithm::output_packed:
      for (std::size_t x = 0; x < n_i; ++x) lay[x] = static_cast<int>(x);
      break;
    case MatvecAlgorithm::input_packed:
    case MatvecAlgorithm::diagonal:
      for (std::size_t x = 0; x < n; ++x) lay[x] = static_cast<int>(x % n_i);
      break;
    case MatvecAlgorithm::hybrid: {
      const auto h = hybrid_shape(n, n_i, n_o);
      for (std::size_t x = 0; x < n; ++x) {
        const std::size_t col = x % n_o;
        const std::size_t chunk = (x % h.n_eff) / n_o;
        lay[x] = static_cast<int>(col % h.k + h.k * chunk);
      }
      break;
    }
  }
  return lay;
}

std::vector<std::vector<int>> entry_map(const EncodedMatrix& enc, const Context& ctx) {
  const std::size_t n = enc.n;
  const std::size_t n_i = enc.n_i;
  const std::size_t n_o = enc.n_o;
  const auto& lay = enc.input_layout;
  std::vector<std::vector<int>> map;
  auto flat = [&](std::size_t r, std::size_t c) { return static_cast<int>(r * n_i + c); };
  switch (enc.algorithm) {
    case MatvecAlgorithm::naive:
    case MatvecAlgorithm::output_packed:
      for (std::size_t r = 0; r < n_o; ++r) {
        std::vector<int> m(n, -1);
        for (std::size_t x = 0; x < n_i; ++x) m[x] = flat(r, x);
        map.push_back(std::move(m));
      }
      break;
    case MatvecAlgorithm::input_packed: {
      const std::size_t copies = n / n_i;
      for (std::size_t t = 0; t < packed_cts(n, n_i, n_o); ++t) {
        std::vector<int> m(n, -1);
        for (std::size_t x = 0; x < n; ++x) {
          const std::size_t r = t * copies + x / n_i;
          if (r < n_o) m[x] = flat(r, x % n_i);
        }
        map.push_back(std::move(m));
      }
      break;
    }
    case MatvecAlgorithm::diagonal:
    case MatvecAlgorithm::hybrid: {
      const bool diag = enc.algorithm == MatvecAlgorithm::diagonal;
      const auto h = hybrid_shape(n, n_i, n_o);
      const std::size_t count = diag ? n_i : h.k;
      const std::size_t used = diag ? n_o : h.n_eff;
      for (std::size_t k = 0; k < count; ++k) {
        const PermId g = amount_to_perm(k, n);
        std::vector<int> m(n, -1);
        for (std::size_t x = 0; x < used; ++x) {
          const int c = lay[ctx.slot_source(x, g)];
          if (c < 0) throw Error("entry_map: rotation reads an unused slot");
          m[x] = flat(x % n_o, static_cast<std::size_t>(c));
        }
        map.push_back(std::move(m));
      }
      break;
    }
  }
  std::vector<u8> seen(n_o * n_i, 0);
  for (const auto& m : map)
    for (int e : m) {
      if (e < 0) continue;
      if (seen[static_cast<std::size_t>(e)]++) throw Error("entry_map: matrix entry used twice");
    }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw Error("entry_map: matrix entry never used");
  return map;
}

}  // namespace linalg_detail

using namespace linalg_detail;

EncodedMatrix encode_matrix(const WeightMatrix& w, MatvecAlgorithm a, const MatvecOptions& opt, const Evaluator& ev) {
  const Context& ctx = ev.context();
  const std::size_t n = ctx.n();
  check_shape(a, n, w.n_i, w.n_o);
  if (w.w.size() != w.n_o * w.n_i) throw std::invalid_argument("encode_matrix: weight storage size mismatch");
  if (opt.w_pt < 1 || opt.w_relin < 1 || opt.w_relin > 60) throw std::invalid_argument("encode_matrix: bad window widths");

  EncodedMatrix enc;
  enc.algorithm = a;
  enc.n = n;
  enc.n_i = w.n_i;
  enc.n_o = w.n_o;
  enc.opt = opt;
  enc.input_layout = input_layout(a, n, w.n_i, w.n_o);

  const auto entries = entry_map(enc, ctx);
  const ModulusP& p = ctx.p();
  enc.slots.reserve(entries.size());
  for (const auto& row : entries) {
    std::vector<u64> s(n, 0);
    for (std::size_t x = 0; x < n; ++x)
      if (row[x] >= 0) s[x] = p.reduce(w.w[static_cast<std::size_t>(row[x])]);
    enc.slots.push_back(std::move(s));
  }
  enc.plains.reserve(enc.slots.size());
  for (const auto& s : enc.slots) enc.plains.push_back(ev.encode_windows(s, opt.w_pt));

  switch (a) {
    case MatvecAlgorithm::naive:
      enc.output_perms = rotate_and_sum(w.n_i, 1, n);
      break;
    case MatvecAlgorithm::output_packed: {
      enc.output_perms = rotate_and_sum(w.n_i, 1, n);
      std::vector<u64> mask(n, 0);
      mask[0] = 1;
      enc.masks.push_back(ev.encode_windows(mask, 32));
      for (std::size_t i = 1; i < w.n_o; ++i) enc.placement_perms.push_back(placement(i, n));
      break;
    }
    case MatvecAlgorithm::input_packed:
      enc.output_perms = rotate_and_sum(w.n_i, 1, n);
      break;
    case MatvecAlgorithm::diagonal:
      for (std::size_t k = 0; k < w.n_i; ++k) enc.input_perms.push_back(amount_to_perm(k, n));
      break;
    case MatvecAlgorithm::hybrid: {
      const auto h = hybrid_shape(n, w.n_i, w.n_o);
      enc.n_eff = h.n_eff;
      enc.k = h.k;
      for (std::size_t k = 0; k < h.k; ++k) enc.input_perms.push_back(amount_to_perm(k, n));
      enc.output_perms = rotate_and_sum(h.n_eff, w.n_o, n);
      break;
    }
  }
  return enc;
}

WeightMatrix decode_matrix(const EncodedMatrix& enc, const Context& ctx) {
  const auto entries = entry_map(enc, ctx);
  if (entries.size() != enc.slots.size()) throw Error("decode_matrix: plaintext count mismatch");
  WeightMatrix w = WeightMatrix::zeros(enc.n_o, enc.n_i);
  std::vector<int> seen(w.w.size(), 0);
  for (std::size_t t = 0; t < entries.size(); ++t)
    for (std::size_t x = 0; x < enc.n; ++x) {
      const int e = entries[t][x];
      if (e < 0) continue;
      const auto idx = static_cast<std::size_t>(e);
      if (seen[idx]++ == 0) {
        w.w[idx] = enc.slots[t][x];
      } else if (w.w[idx] != enc.slots[t][x]) {
        throw Error("decode_matrix: inconsistent duplicate entry");
      }
    }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw Error("decode_matrix: entry not covered");
  return w;
}

std::vector<std::vector<int>> matrix_entries(const EncodedMatrix& enc, const Context& ctx) { return entry_map(enc, ctx); }

std::vector<u64> pack_input(const EncodedMatrix& enc, std::span<const u64> v) {
  if (v.size() != enc.n_i) throw std::invalid_argument("pack_input: vector length differs from n_i");
  std::vector<u64> out(enc.n, 0);
  for (std::size_t x = 0; x < enc.n; ++x)
    if (enc.input_layout[x] >= 0) out[x] = v[static_cast<std::size_t>(enc.input_layout[x])];
  return out;
}

std::pair<std::size_t, std::size_t> output_position(const EncodedMatrix& enc, std::size_t i) {
  if (i >= enc.n_o) throw std::out_of_range("output_position: row out of range");
  switch (enc.algorithm) {
    case MatvecAlgorithm::naive: return {i, 0};
    case MatvecAlgorithm::input_packed: {
      const std::size_t copies = enc.n / enc.n_i;
      return {i / copies, (i % copies) * enc.n_i};
    }
    default: return {0, i};
  }
}

std::vector<u64> unpack_output(const EncodedMatrix& enc, const std::vector<PlaintextVector>& cts) {
  std::vector<u64> out(enc.n_o);
  for (std::size_t i = 0; i < enc.n_o; ++i) {
    const auto [c, s] = output_position(enc, i);
    if (c >= cts.size()) throw std::invalid_argument("unpack_output: missing ciphertext");
    out[i] = cts[c][s];
  }
  return out;
}

std::vector<PermId> required_perms(const EncodedMatrix& enc) {
  std::vector<PermId> out;
  auto add = [&](const PermId& id) {
    if (id.is_identity()) return;
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  };
  for (const auto& id : enc.input_perms) add(id);
  for (const auto& id : enc.output_perms) add(id);
  for (const auto& id : enc.placement_perms) add(id);
  return out;
}

void KeyRing::insert(PermutationKey key) {
  const auto k = std::make_tuple(key.id.rot, key.id.swap, key.w_relin);
  keys_.insert_or_assign(k, std::move(key));
}

const PermutationKey& KeyRing::get(const PermId& id, int w_relin) const {
  const auto it = keys_.find(std::make_tuple(id.rot, id.swap, w_relin));
  if (it == keys_.end())
    throw Error("missing rotation key (rot " + std::to_string(id.rot) + ", swap " + std::to_string(id.swap) + ", w_relin " + std::to_string(w_relin) + ")");
  return it->second;
}

bool KeyRing::contains(const PermId& id, int w_relin) const { return keys_.count(std::make_tuple(id.rot, id.swap, w_relin)) != 0; }

std::vector<const PermutationKey*> KeyRing::all() const {
  std::vector<const PermutationKey*> out;
  for (const auto& [k, v] : keys_) out.push_back(&v);
  return out;
}

void ensure_keys(KeyRing& ring, const KeyGenerator& kg, const SecretKey& sk, std::span<const PermId> ids, int w_relin, Prg& prg) {
  for (const auto& id : ids) {
    if (id.is_identity() || ring.contains(id, w_relin)) continue;
    ring.insert(kg.perm_key(sk, id, w_relin, prg));
  }
}

}  // namespace hinfer
