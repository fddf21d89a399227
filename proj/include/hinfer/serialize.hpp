#pragma once

#include <span>
#include <vector>

#include "hinfer/pahe.hpp"

namespace hinfer {

inline constexpr u32 kPaheMagic = 0x45484148;  // "HAHE"
inline constexpr u16 kPaheVersion = 1;
inline constexpr std::size_t kPaheHeaderSize = 32;

enum class PaheKind : u16 { ciphertext = 1, perm_key = 2, rerand_key = 3 };

std::vector<u8> serialize(const Context& ctx, const Ciphertext& ct);
// The received estimate is reset to the fresh-encryption bound.
Ciphertext deserialize_ciphertext(const Context& ctx, std::span<const u8> bytes);

std::vector<u8> serialize(const Context& ctx, const PermutationKey& key);
PermutationKey deserialize_perm_key(const Context& ctx, std::span<const u8> bytes);

std::vector<u8> serialize(const Context& ctx, const RerandKey& key);
RerandKey deserialize_rerand_key(const Context& ctx, std::span<const u8> bytes);

// Serialized size of one ciphertext for the given context.
std::size_t ciphertext_wire_size(const Context& ctx);

}  // namespace hinfer
