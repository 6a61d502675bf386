#include "conicd/scalar.hpp"

#include <cctype>

namespace conicd {

bool is_rational_token(const std::string& tok) {
  if (tok.empty()) return false;
  size_t i = 0;
  if (tok[i] == '+' || tok[i] == '-') ++i;
  size_t digits = 0;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i, ++digits;
  if (digits == 0) return false;
  if (i == tok.size()) return true;
  if (tok[i] != '/') return false;
  ++i;
  digits = 0;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i, ++digits;
  return digits > 0 && i == tok.size();
}

static bool is_decimal_token(const std::string& tok) {
  size_t i = 0;
  if (i < tok.size() && (tok[i] == '+' || tok[i] == '-')) ++i;
  size_t mant = 0;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i, ++mant;
  if (i < tok.size() && tok[i] == '.') {
    ++i;
    while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i, ++mant;
  }
  if (mant == 0) return false;
  if (i < tok.size() && (tok[i] == 'e' || tok[i] == 'E')) {
    ++i;
    if (i < tok.size() && (tok[i] == '+' || tok[i] == '-')) ++i;
    size_t ed = 0;
    while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i, ++ed;
    if (ed == 0) return false;
  }
  return i == tok.size();
}

Rational parse_rational(const std::string& tok) {
  if (is_rational_token(tok)) {
    std::string t = tok[0] == '+' ? tok.substr(1) : tok;
    Rational q(t, 10);
    if (q.get_den() == 0) throw std::invalid_argument("zero denominator in '" + tok + "'");
    q.canonicalize();
    return q;
  }
  if (!is_decimal_token(tok)) throw std::invalid_argument("not a number: '" + tok + "'");
  // Exact decimal expansion: mantissa digits over a power of ten.
  std::string mant;
  long exp10 = 0;
  size_t i = 0;
  bool neg = false;
  if (tok[i] == '+' || tok[i] == '-') neg = tok[i++] == '-';
  bool frac = false;
  for (; i < tok.size() && tok[i] != 'e' && tok[i] != 'E'; ++i) {
    if (tok[i] == '.') {
      frac = true;
      continue;
    }
    mant.push_back(tok[i]);
    if (frac) --exp10;
  }
  if (i < tok.size()) exp10 += std::stol(tok.substr(i + 1));
  mpz_class num(mant, 10), p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
  Rational q = exp10 >= 0 ? Rational(num * p10) : Rational(num, p10);
  q.canonicalize();
  return neg ? Rational(-q) : q;
}

Rational best_rational(double x, long max_den) {
  if (!std::isfinite(x)) throw NonFinite("best_rational: non-finite input");
  bool neg = x < 0;
  double a = std::fabs(x);
  // Convergents h/k of the continued fraction; stop before the denominator bound.
  mpz_class h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = a;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(r);
    mpz_class ai(fl);
    mpz_class h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    double frac = r - fl;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
    if (r > 1e15) break;
  }
  if (k1 == 0) return Rational(0);
  Rational q(h1, k1);
  q.canonicalize();
  return neg ? Rational(-q) : q;
}

}  // namespace conicd
