// AVX2 variant of the sampling kernel: four addresses per step, one lane
// each.  Every floating-point operation mirrors the scalar reference in the
// same order with the same rounding (no FMA), so results are bit-identical.

#include <immintrin.h>

#include <limits>

#include "gatesim/mathkern.hpp"
#include "gatesim/probe_kernel.hpp"
#include "gatesim/rng.hpp"

namespace gatesim {

using namespace kerneldetail;
using namespace mathdetail;

namespace {

// 64x64 -> low 64 multiply from 32-bit partial products.
inline __m256i mul64(__m256i a, __m256i b) {
  __m256i a_hi = _mm256_srli_epi64(a, 32);
  __m256i b_hi = _mm256_srli_epi64(b, 32);
  __m256i ll = _mm256_mul_epu32(a, b);
  __m256i lh = _mm256_mul_epu32(a, b_hi);
  __m256i hl = _mm256_mul_epu32(a_hi, b);
  __m256i cross = _mm256_add_epi64(lh, hl);
  return _mm256_add_epi64(ll, _mm256_slli_epi64(cross, 32));
}

inline __m256i mix64v(__m256i x) {
  x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 30));
  x = mul64(x, _mm256_set1_epi64x(static_cast<long long>(0xBF58476D1CE4E5B9ull)));
  x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 27));
  x = mul64(x, _mm256_set1_epi64x(static_cast<long long>(0x94D049BB133111EBull)));
  x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 31));
  return x;
}

// Exact u64 -> double for values below 2^52.
inline __m256d u52_to_pd(__m256i v) {
  __m256i magic = _mm256_set1_epi64x(0x4330000000000000ll);
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, magic)),
                       _mm256_set1_pd(0x1p52));
}

// Exact i64 -> double for |v| below 2^51.
inline __m256d i51_to_pd(__m256i v) {
  __m256i magic = _mm256_set1_epi64x(0x4338000000000000ll);
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(v, magic)),
                       _mm256_set1_pd(6755399441055744.0));  // 2^52 + 2^51
}

// (low32(h) * count) >> 32, lane-wise.
inline __m256i range32(__m256i h, __m256i count) {
  __m256i lo = _mm256_and_si256(h, _mm256_set1_epi64x(0xFFFFFFFFll));
  return _mm256_srli_epi64(_mm256_mul_epu32(lo, count), 32);
}

inline __m256d to_unit_v(__m256i h) {
  __m256d t = u52_to_pd(_mm256_srli_epi64(h, 12));
  return _mm256_mul_pd(_mm256_add_pd(t, _mm256_set1_pd(0.5)),
                       _mm256_set1_pd(0x1p-52));
}

inline __m256d log_fixed_v(__m256d x) {
  __m256i bits = _mm256_castpd_si256(x);
  __m256i e = _mm256_sub_epi64(
      _mm256_and_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x7FF)),
      _mm256_set1_epi64x(1023));
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
      _mm256_set1_epi64x(0x3FF0000000000000ll)));
  __m256d gt = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), gt);
  // gt lanes are all-ones == -1: subtracting adds 1 to the exponent.
  e = _mm256_sub_epi64(e, _mm256_castpd_si256(gt));
  __m256d one = _mm256_set1_pd(1.0);
  __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  __m256d z = _mm256_mul_pd(s, s);
  __m256d poly = _mm256_set1_pd(kL13);
  poly = _mm256_add_pd(_mm256_mul_pd(poly, z), _mm256_set1_pd(kL11));
  poly = _mm256_add_pd(_mm256_mul_pd(poly, z), _mm256_set1_pd(kL9));
  poly = _mm256_add_pd(_mm256_mul_pd(poly, z), _mm256_set1_pd(kL7));
  poly = _mm256_add_pd(_mm256_mul_pd(poly, z), _mm256_set1_pd(kL5));
  poly = _mm256_add_pd(_mm256_mul_pd(poly, z), _mm256_set1_pd(kL3));
  poly = _mm256_add_pd(_mm256_mul_pd(poly, z), one);
  __m256d lm = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), s), poly);
  __m256d ed = i51_to_pd(e);
  return _mm256_add_pd(
      _mm256_mul_pd(ed, _mm256_set1_pd(kLn2Hi)),
      _mm256_add_pd(_mm256_mul_pd(ed, _mm256_set1_pd(kLn2Lo)), lm));
}

inline __m256d inv_normal_cdf_v(__m256d p) {
  __m256d one = _mm256_set1_pd(1.0);
  __m256d one_minus = _mm256_sub_pd(one, p);
  __m256d pt = _mm256_min_pd(p, one_minus);
  __m256d lower = _mm256_cmp_pd(p, _mm256_set1_pd(kPLow), _CMP_LT_OQ);
  __m256d upper = _mm256_cmp_pd(p, _mm256_set1_pd(kPHigh), _CMP_GT_OQ);
  __m256d tail = _mm256_or_pd(lower, upper);

  __m256d q = _mm256_sqrt_pd(
      _mm256_mul_pd(_mm256_set1_pd(-2.0), log_fixed_v(pt)));
  __m256d num = _mm256_set1_pd(kC[0]);
  num = _mm256_add_pd(_mm256_mul_pd(num, q), _mm256_set1_pd(kC[1]));
  num = _mm256_add_pd(_mm256_mul_pd(num, q), _mm256_set1_pd(kC[2]));
  num = _mm256_add_pd(_mm256_mul_pd(num, q), _mm256_set1_pd(kC[3]));
  num = _mm256_add_pd(_mm256_mul_pd(num, q), _mm256_set1_pd(kC[4]));
  num = _mm256_add_pd(_mm256_mul_pd(num, q), _mm256_set1_pd(kC[5]));
  __m256d den = _mm256_set1_pd(kD[0]);
  den = _mm256_add_pd(_mm256_mul_pd(den, q), _mm256_set1_pd(kD[1]));
  den = _mm256_add_pd(_mm256_mul_pd(den, q), _mm256_set1_pd(kD[2]));
  den = _mm256_add_pd(_mm256_mul_pd(den, q), _mm256_set1_pd(kD[3]));
  den = _mm256_add_pd(_mm256_mul_pd(den, q), one);
  __m256d vt = _mm256_div_pd(num, den);
  vt = _mm256_blendv_pd(_mm256_xor_pd(vt, _mm256_set1_pd(-0.0)), vt, lower);

  __m256d qc = _mm256_sub_pd(p, _mm256_set1_pd(0.5));
  __m256d r = _mm256_mul_pd(qc, qc);
  __m256d numc = _mm256_set1_pd(kA[0]);
  numc = _mm256_add_pd(_mm256_mul_pd(numc, r), _mm256_set1_pd(kA[1]));
  numc = _mm256_add_pd(_mm256_mul_pd(numc, r), _mm256_set1_pd(kA[2]));
  numc = _mm256_add_pd(_mm256_mul_pd(numc, r), _mm256_set1_pd(kA[3]));
  numc = _mm256_add_pd(_mm256_mul_pd(numc, r), _mm256_set1_pd(kA[4]));
  numc = _mm256_add_pd(_mm256_mul_pd(numc, r), _mm256_set1_pd(kA[5]));
  numc = _mm256_mul_pd(numc, qc);
  __m256d denc = _mm256_set1_pd(kB[0]);
  denc = _mm256_add_pd(_mm256_mul_pd(denc, r), _mm256_set1_pd(kB[1]));
  denc = _mm256_add_pd(_mm256_mul_pd(denc, r), _mm256_set1_pd(kB[2]));
  denc = _mm256_add_pd(_mm256_mul_pd(denc, r), _mm256_set1_pd(kB[3]));
  denc = _mm256_add_pd(_mm256_mul_pd(denc, r), _mm256_set1_pd(kB[4]));
  denc = _mm256_add_pd(_mm256_mul_pd(denc, r), one);
  __m256d vc = _mm256_div_pd(numc, denc);

  return _mm256_blendv_pd(vc, vt, tail);
}

}  // namespace

void min_stat_avx2(const SampleParams& sp, const uint64_t* addrs,
                   const Band* bands, size_t n, uint32_t n_samples,
                   double* out) {
  const __m256i seed_v = _mm256_set1_epi64x(static_cast<long long>(sp.probe_seed));
  const __m256d overhead = _mm256_set1_pd(sp.timer_overhead);
  const __m256i jitter_n =
      _mm256_set1_epi64x(static_cast<long long>(sp.jitter_count));
  const __m256d sigma = _mm256_set1_pd(sp.sigma);
  const __m256d rate = _mm256_set1_pd(sp.contention_rate);
  const __m256d shift = _mm256_set1_pd(sp.outlier_shift);
  const bool do_gauss = sp.sigma > 0.0;
  const bool do_outlier = sp.contention_rate > 0.0;
  const bool do_tick = sp.tick > 0.0;
  const __m256d tick = _mm256_set1_pd(sp.tick);

  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256i addr_v = _mm256_loadu_si256(
        reinterpret_cast<const __m256i*>(addrs + i));
    __m256i base = mix64v(_mm256_xor_si256(seed_v, mix64v(addr_v)));
    __m256i lo_v = _mm256_set_epi64x(bands[i + 3].lo, bands[i + 2].lo,
                                     bands[i + 1].lo, bands[i].lo);
    __m256i count_v = _mm256_set_epi64x(bands[i + 3].count, bands[i + 2].count,
                                        bands[i + 1].count, bands[i].count);
    __m256d acc = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    for (uint32_t k = 0; k < n_samples; ++k) {
      __m256i key = mix64v(_mm256_add_epi64(
          base, _mm256_set1_epi64x(static_cast<long long>(
                    (static_cast<uint64_t>(k) + 1) * kGolden))));
      __m256i h1 = mix64v(_mm256_xor_si256(key, _mm256_set1_epi64x(
                                                    static_cast<long long>(kDomBand))));
      __m256i h2 = mix64v(_mm256_xor_si256(key, _mm256_set1_epi64x(
                                                    static_cast<long long>(kDomJitter))));
      __m256d v = u52_to_pd(_mm256_add_epi64(lo_v, range32(h1, count_v)));
      v = _mm256_add_pd(v, overhead);
      v = _mm256_add_pd(v, u52_to_pd(range32(h2, jitter_n)));
      if (do_gauss) {
        __m256i h3 = mix64v(_mm256_xor_si256(
            key, _mm256_set1_epi64x(static_cast<long long>(kDomGauss))));
        __m256d z = inv_normal_cdf_v(to_unit_v(h3));
        v = _mm256_add_pd(v, _mm256_mul_pd(sigma, z));
      }
      if (do_outlier) {
        __m256i h4 = mix64v(_mm256_xor_si256(
            key, _mm256_set1_epi64x(static_cast<long long>(kDomOutlier))));
        __m256d u4 = to_unit_v(h4);
        __m256d hit = _mm256_cmp_pd(u4, rate, _CMP_LT_OQ);
        v = _mm256_add_pd(v, _mm256_and_pd(hit, shift));
      }
      if (do_tick) {
        v = _mm256_mul_pd(_mm256_floor_pd(_mm256_div_pd(v, tick)), tick);
      }
      acc = _mm256_min_pd(acc, v);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  if (i < n) {
    min_stat_scalar(sp, addrs + i, bands + i, n - i, n_samples, out + i);
  }
}

}  // namespace gatesim
