#include "hinfer/aes.hpp"

#include <wmmintrin.h>
#include <smmintrin.h>

namespace hinfer {

namespace {

__m128i load(const Block& b) { return _mm_set_epi64x(static_cast<long long>(b.hi), static_cast<long long>(b.lo)); }

Block store(__m128i v) {
  return {static_cast<u64>(_mm_extract_epi64(v, 0)), static_cast<u64>(_mm_extract_epi64(v, 1))};
}

template <int Rcon>
__m128i expand_step(__m128i key) {
  __m128i assist = _mm_aeskeygenassist_si128(key, Rcon);
  assist = _mm_shuffle_epi32(assist, 0xff);
  key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
  key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
  key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
  return _mm_xor_si128(key, assist);
}

}  // namespace

Aes128::Aes128(const Block& key) {
  __m128i k = load(key);
  round_keys_[0] = store(k);
  k = expand_step<0x01>(k); round_keys_[1] = store(k);
  k = expand_step<0x02>(k); round_keys_[2] = store(k);
  k = expand_step<0x04>(k); round_keys_[3] = store(k);
  k = expand_step<0x08>(k); round_keys_[4] = store(k);
  k = expand_step<0x10>(k); round_keys_[5] = store(k);
  k = expand_step<0x20>(k); round_keys_[6] = store(k);
  k = expand_step<0x40>(k); round_keys_[7] = store(k);
  k = expand_step<0x80>(k); round_keys_[8] = store(k);
  k = expand_step<0x1b>(k); round_keys_[9] = store(k);
  k = expand_step<0x36>(k); round_keys_[10] = store(k);
}

Block Aes128::encrypt(const Block& in) const {
  __m128i v = _mm_xor_si128(load(in), load(round_keys_[0]));
  for (int r = 1; r < 10; ++r) v = _mm_aesenc_si128(v, load(round_keys_[r]));
  return store(_mm_aesenclast_si128(v, load(round_keys_[10])));
}

void Aes128::encrypt_blocks(std::span<Block> blocks) const {
  __m128i rk[11];
  for (int r = 0; r < 11; ++r) rk[r] = load(round_keys_[r]);
  std::size_t i = 0;
  for (; i + 4 <= blocks.size(); i += 4) {
    __m128i a = _mm_xor_si128(load(blocks[i]), rk[0]);
    __m128i b = _mm_xor_si128(load(blocks[i + 1]), rk[0]);
    __m128i c = _mm_xor_si128(load(blocks[i + 2]), rk[0]);
    __m128i d = _mm_xor_si128(load(blocks[i + 3]), rk[0]);
    for (int r = 1; r < 10; ++r) {
      a = _mm_aesenc_si128(a, rk[r]);
      b = _mm_aesenc_si128(b, rk[r]);
      c = _mm_aesenc_si128(c, rk[r]);
      d = _mm_aesenc_si128(d, rk[r]);
    }
    blocks[i] = store(_mm_aesenclast_si128(a, rk[10]));
    blocks[i + 1] = store(_mm_aesenclast_si128(b, rk[10]));
    blocks[i + 2] = store(_mm_aesenclast_si128(c, rk[10]));
    blocks[i + 3] = store(_mm_aesenclast_si128(d, rk[10]));
  }
  for (; i < blocks.size(); ++i) blocks[i] = encrypt(blocks[i]);
}

}  // namespace hinfer
