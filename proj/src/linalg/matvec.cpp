#include <algorithm>
#include <stdexcept>

#include "hinfer/linalg.hpp"
#include "layout.hpp"

namespace hinfer {

namespace {

// Adds uniform values to every slot outside `keep`.
Ciphertext randomize_outside(const Ciphertext& ct, const std::vector<bool>& keep, const Evaluator& ev, Prg& prg) {
  const u64 p = ev.context().p().value();
  std::vector<u64> r(ev.context().n(), 0);
  for (std::size_t x = 0; x < r.size(); ++x)
    if (!keep[x]) r[x] = prg.uniform(p);
  return ev.add_plain(ct, r);
}

Ciphertext rotate_and_sum(Ciphertext acc, const std::vector<PermId>& steps, const EncodedMatrix& enc, const KeyRing& keys,
                          const Evaluator& ev, OpCount& ops) {
  for (const auto& id : steps) {
    const Ciphertext r = ev.perm(acc, keys.get(id, enc.opt.w_relin));
    ++ops.perm;
    ev.add_inplace(acc, r);
    ++ops.add;
  }
  return acc;
}

std::vector<Ciphertext> row_products(const EncodedMatrix& enc, const WindowedCiphertext& input, const KeyRing& keys,
                                     const Evaluator& ev, OpCount& ops) {
  std::vector<Ciphertext> out;
  out.reserve(enc.plains.size());
  for (const auto& pt : enc.plains) {
    Ciphertext prod = ev.scmult(input, pt);
    ++ops.scmult;
    out.push_back(rotate_and_sum(std::move(prod), enc.output_perms, enc, keys, ev, ops));
  }
  return out;
}

Ciphertext diagonal_products(const EncodedMatrix& enc, const WindowedCiphertext& input, const KeyRing& keys,
                             const Evaluator& ev, OpCount& ops) {
  std::size_t parts = 0;
  for (const auto& pt : enc.plains) parts = std::max(parts, pt.chunks.size());
  if (input.parts.size() < parts) throw std::invalid_argument("matvec: missing window ciphertexts");

  std::vector<HoistedCiphertext> hoisted;
  if (enc.input_perms.size() > 1)
    for (std::size_t j = 0; j < parts; ++j) hoisted.push_back(ev.perm_decomp(input.parts[j], enc.opt.w_relin));

  Ciphertext acc = ev.zero();
  for (std::size_t k = 0; k < enc.plains.size(); ++k) {
    const PermId& id = enc.input_perms[k];
    Ciphertext prod;
    if (id.is_identity()) {
      prod = ev.scmult(input, enc.plains[k]);
    } else {
      const PermutationKey& key = keys.get(id, enc.opt.w_relin);
      WindowedCiphertext rotated;
      rotated.w_pt = input.w_pt;
      for (std::size_t j = 0; j < parts; ++j) rotated.parts.push_back(ev.perm_auto(hoisted[j], key));
      ++ops.perm_hoisted;
      prod = ev.scmult(rotated, enc.plains[k]);
    }
    ++ops.scmult;
    ev.add_inplace(acc, prod);
    ++ops.add;
  }
  return acc;
}

}  // namespace

MatvecResult matvec(const EncodedMatrix& enc, const WindowedCiphertext& input, const KeyRing& keys, const Evaluator& ev, Prg& prg) {
  if (enc.n != ev.context().n()) throw std::invalid_argument("matvec: encoding does not match the context");
  if (input.parts.empty()) throw std::invalid_argument("matvec: empty input");
  MatvecResult res;
  OpCount& ops = res.ops;
  const std::size_t n = enc.n;

  switch (enc.algorithm) {
    case MatvecAlgorithm::naive:
    case MatvecAlgorithm::input_packed: {
      auto outs = row_products(enc, input, keys, ev, ops);
      for (std::size_t c = 0; c < outs.size(); ++c) {
        std::vector<bool> keep(n, false);
        for (std::size_t i = 0; i < enc.n_o; ++i) {
          const auto [ct, slot] = output_position(enc, i);
          if (ct == c) keep[slot] = true;
        }
        res.cts.push_back(randomize_outside(outs[c], keep, ev, prg));
      }
      break;
    }
    case MatvecAlgorithm::output_packed: {
      auto outs = row_products(enc, input, keys, ev, ops);
      Ciphertext acc = ev.zero();
      for (std::size_t i = 0; i < outs.size(); ++i) {
        Ciphertext m = ev.scmult(outs[i], enc.masks.front());
        ++ops.scmult;
        if (i > 0) {
          m = ev.perm(m, keys.get(enc.placement_perms[i - 1], enc.opt.w_relin));
          ++ops.perm;
        }
        ev.add_inplace(acc, m);
        ++ops.add;
      }
      res.cts.push_back(std::move(acc));
      break;
    }
    case MatvecAlgorithm::diagonal:
      res.cts.push_back(diagonal_products(enc, input, keys, ev, ops));
      break;
    case MatvecAlgorithm::hybrid: {
      Ciphertext acc = diagonal_products(enc, input, keys, ev, ops);
      acc = rotate_and_sum(std::move(acc), enc.output_perms, enc, keys, ev, ops);
      std::vector<bool> keep(n, false);
      for (std::size_t i = 0; i < enc.n_o; ++i) keep[i] = true;
      res.cts.push_back(randomize_outside(acc, keep, ev, prg));
      break;
    }
  }
  res.ops.output_cts = res.cts.size();
  return res;
}

}  // namespace hinfer
