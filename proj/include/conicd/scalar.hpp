#pragma once

#include <gmpxx.h>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace conicd {

using Rational = mpq_class;

enum class Mode { Exact, Float };

inline const char* mode_name(Mode m) { return m == Mode::Exact ? "exact" : "float"; }

struct Tolerance {
  double rank = 1e-9;  // relative to the largest singular value
  double feas = 1e-8;  // cone membership slack
  double eig = 1e-10;  // decomposition residual
};

struct Unsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
struct Field;

template <>
struct Field<double> {
  static constexpr bool exact = false;
  static constexpr Mode mode = Mode::Float;
  static double to_double(double x) { return x; }
  static double from_double(double x) { return x; }
  static double from_rational(const Rational& q) { return q.get_d(); }
  static bool is_zero(double x, double tol) { return std::fabs(x) <= tol; }
  static int sign(double x, double tol) { return x > tol ? 1 : (x < -tol ? -1 : 0); }
  static double abs(double x) { return std::fabs(x); }
  static std::optional<double> sqrt(double x) {
    if (x < 0) return std::nullopt;
    return std::sqrt(x);
  }
  static std::string str(double x);
};

template <>
struct Field<Rational> {
  static constexpr bool exact = true;
  static constexpr Mode mode = Mode::Exact;
  static double to_double(const Rational& x) { return x.get_d(); }
  static Rational from_double(double x) { return Rational(x); }
  static Rational from_rational(const Rational& q) { return q; }
  static bool is_zero(const Rational& x, double) { return sgn(x) == 0; }
  static int sign(const Rational& x, double) { return sgn(x); }
  static Rational abs(const Rational& x) { return ::abs(x); }
  // Exact square root when the argument is the square of a rational.
  static std::optional<Rational> sqrt(const Rational& x) {
    if (sgn(x) < 0) return std::nullopt;
    Rational c = x;
    c.canonicalize();
    if (!mpz_perfect_square_p(c.get_num_mpz_t()) || !mpz_perfect_square_p(c.get_den_mpz_t()))
      return std::nullopt;
    mpz_class n, d;
    mpz_sqrt(n.get_mpz_t(), c.get_num_mpz_t());
    mpz_sqrt(d.get_mpz_t(), c.get_den_mpz_t());
    return Rational(n, d);
  }
  static std::string str(const Rational& x) {
    Rational c = x;
    c.canonicalize();
    return c.get_str();
  }
};

inline std::string Field<double>::str(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Parse "p/q", an integer, or a decimal into an exact rational.
Rational parse_rational(const std::string& tok);
bool is_rational_token(const std::string& tok);

// Best rational approximation with denominator at most max_den (continued fractions).
Rational best_rational(double x, long max_den);

}  // namespace conicd
