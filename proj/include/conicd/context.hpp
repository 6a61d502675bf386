#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "conicd/scalar.hpp"

namespace conicd {

// Thread-safe set of caveat strings attached to a verdict.
class Caveats {
 public:
  void add(const std::string& c) {
    std::lock_guard<std::mutex> g(mu_);
    set_.insert(c);
  }
  std::vector<std::string> list() const {
    std::lock_guard<std::mutex> g(mu_);
    return {set_.begin(), set_.end()};
  }
  bool empty() const {
    std::lock_guard<std::mutex> g(mu_);
    return set_.empty();
  }
  void merge(const Caveats& o) {
    for (const auto& c : o.list()) add(c);
  }

 private:
  mutable std::mutex mu_;
  std::set<std::string> set_;
};

struct OracleStats {
  std::atomic<long> solves{0};
  std::atomic<long> feasible{0};
  std::atomic<long> infeasible{0};
  std::atomic<long> unknown{0};
  std::atomic<long> newton_steps{0};
};

namespace caveat {
inline const char* kConditional = "conditional on slack maximality";
inline const char* kBorderline = "borderline rank or margin";
inline const char* kInexactNormalForm = "normal form computed in floating point";
inline const char* kPConeFloat = "p-cone test evaluated in floating point";
}  // namespace caveat

struct SearchOptions {
  int restarts = 50;
  int iterations = 500;
};

struct Ctx {
  Tolerance tol;
  std::uint64_t seed = 1;
  int threads = 1;
  bool search = true;  // certificate search; off means verdict only
  SearchOptions budget;
  mutable Caveats caveats;
  mutable OracleStats stats;
};

}  // namespace conicd
