#pragma once

#include <vector>

#include "hinfer/linalg.hpp"

namespace hinfer::linalg_detail {

struct HybridShape {
  std::size_t n_eff = 0;  // period of the input layout
  std::size_t k = 0;      // multiplies, one per input rotation
};

void check_shape(MatvecAlgorithm a, std::size_t n, std::size_t n_i, std::size_t n_o);
std::size_t packed_cts(std::size_t n, std::size_t n_i, std::size_t n_o);
HybridShape hybrid_shape(std::size_t n, std::size_t n_i, std::size_t n_o);

// Left rotation by `amount` slots in [0, n); amounts past n/2 swap halves.
PermId amount_to_perm(std::size_t amount, std::size_t n);
// Element moving slot 0 to slot i.
PermId placement(std::size_t i, std::size_t n);
// Amounts from/2, from/4, ..., down_to.
std::vector<PermId> rotate_and_sum(std::size_t from, std::size_t down_to, std::size_t n);
std::vector<int> input_layout(MatvecAlgorithm a, std::size_t n, std::size_t n_i, std::size_t n_o);

// For each plaintext and slot, the flat matrix index r*n_i + c multiplied
// there, or -1. Checks that every entry of W is used exactly once.
std::vector<std::vector<int>> entry_map(const EncodedMatrix& enc, const Context& ctx);

}  // namespace hinfer::linalg_detail
