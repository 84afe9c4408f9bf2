#include "gatesim/mathkern.hpp"

#include <bit>
#include <cmath>

namespace gatesim {

using namespace mathdetail;

double log_fixed(double x) {
  const uint64_t bits = std::bit_cast<uint64_t>(x);
  int64_t e = static_cast<int64_t>((bits >> 52) & 0x7FF) - 1023;
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) |
                                   0x3FF0000000000000ull);  // [1, 2)
  if (m > kSqrt2) {
    m = m * 0.5;
    e = e + 1;
  }
  const double s = (m - 1.0) / (m + 1.0);
  const double z = s * s;
  double poly = kL13;
  poly = poly * z + kL11;
  poly = poly * z + kL9;
  poly = poly * z + kL7;
  poly = poly * z + kL5;
  poly = poly * z + kL3;
  poly = poly * z + 1.0;
  const double lm = (2.0 * s) * poly;
  const double ed = static_cast<double>(e);
  return ed * kLn2Hi + (ed * kLn2Lo + lm);
}

double inv_normal_cdf(double p) {
  const double one_minus = 1.0 - p;
  const double pt = p < one_minus ? p : one_minus;  // min(p, 1-p)
  const bool lower = p < kPLow;
  const bool upper = p > kPHigh;
  if (lower || upper) {
    const double q = std::sqrt(-2.0 * log_fixed(pt));
    double num = kC[0];
    num = num * q + kC[1];
    num = num * q + kC[2];
    num = num * q + kC[3];
    num = num * q + kC[4];
    num = num * q + kC[5];
    double den = kD[0];
    den = den * q + kD[1];
    den = den * q + kD[2];
    den = den * q + kD[3];
    den = den * q + 1.0;
    const double v = num / den;
    return lower ? v : -v;
  }
  const double q = p - 0.5;
  const double r = q * q;
  double num = kA[0];
  num = num * r + kA[1];
  num = num * r + kA[2];
  num = num * r + kA[3];
  num = num * r + kA[4];
  num = num * r + kA[5];
  num = num * q;
  double den = kB[0];
  den = den * r + kB[1];
  den = den * r + kB[2];
  den = den * r + kB[3];
  den = den * r + kB[4];
  den = den * r + 1.0;
  return num / den;
}

}  // namespace gatesim
