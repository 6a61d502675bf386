#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "conicd/report.hpp"

namespace conicd {

struct FixtureMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Expected outcomes for one instance file. Vectors are compared up to a positive factor.
struct Fixture {
  std::string name, file;
  Classification verdict = Classification::Undecided;
  std::optional<Vec<Rational>> direction;     // v of a bad certificate
  std::optional<Vec<Rational>> z_normal;      // normalized maximum slack
  std::optional<Vec<Rational>> u;             // u of a good certificate
  std::optional<Rational> primal_value, dual_value;
  bool dual_attained = true;
  // Dual points y(t) whose objective decreases to dual_value as t grows.
  std::function<Vec<Rational>(const Rational&)> family;
  std::optional<Vec<Rational>> bad_objective;
};

struct CheckLine {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct FixtureReport {
  std::string name;
  bool ok = true;
  std::vector<CheckLine> checks;
  json detail;
};

std::vector<Fixture> builtin_fixtures();
std::string default_fixture_dir();

FixtureReport run_fixture(const Fixture& f, const std::string& dir, const Ctx& ctx);
// Throws FixtureMismatch listing the failed checks.
void require_fixture(const Fixture& f, const std::string& dir, const Ctx& ctx);
std::vector<FixtureReport> run_demo(const std::string& dir, int threads, std::uint64_t seed);

// Value of sup <c, x> when c is constant on the feasible set, else nullopt.
template <class T>
std::optional<T> constant_primal_value(const PrimalSystem<T>& p, const Vec<T>& c, const Ctx& ctx);

}  // namespace conicd
