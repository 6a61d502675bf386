#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conicd/cones.hpp"

namespace conicd {

enum class OracleStatus { Feasible, Infeasible, Unknown };

const char* status_name(OracleStatus s);

// Feasible: witness in S and in the relative interior (or, for the
// outside-face query, a point of S and K outside lin F).
// Infeasible: witness is a nonzero u in S^perp and K* (separation).
template <class T>
struct OracleResult {
  OracleStatus status = OracleStatus::Unknown;
  Vec<T> witness;
  double margin = 0;
  bool borderline = false;
  std::string note;
};

// Float engine: maximize t subject to y in S, <y, e> = 1, y - t e in K,
// where e is the identity / e1 / all-ones point. Barrier Newton method.
struct MarginResult {
  double t = -std::numeric_limits<double>::infinity();
  Vec<double> y;
  bool orthogonal = false;  // S is orthogonal to e: S and K meet only at 0
  int steps = 0;
};
MarginResult max_margin(const ConeSpec& k, const std::vector<Vec<double>>& basis, const SearchOptions& opt,
                        OracleStats* stats = nullptr);

// Orthogonal complement with respect to the cone pairing.
template <class T>
Subspace<T> pair_complement(const ConeSpec& k, const Subspace<T>& s, const Tolerance& tol);
// {theta : map * theta in s}
template <class T>
Subspace<T> preimage(const Mat<T>& map, const Subspace<T>& s, const Tolerance& tol);

template <class T>
OracleResult<T> strict_feasibility_in_face(const ConeSpec& k, const Subspace<T>& s, const Ctx& ctx);

// One facial reduction step: u in (cone)* exposes the next face.
template <class T>
struct FRStep {
  ConeSpec cone;  // reduced cone before the step
  Mat<T> map;     // original coordinates <- reduced coordinates, before the step
  Vec<T> u;       // reduced coordinates of the exposing functional
};

template <class T>
struct FRResult {
  OracleStatus status = OracleStatus::Unknown;  // Feasible: nonempty; Infeasible: empty
  std::vector<FRStep<T>> chain;
  FaceEmbedding<T> face;  // final face
  Vec<T> slack;           // relative interior point of the feasible slacks
  Vec<T> x;               // slack = b - sum x_i a_i
  Vec<T> certificate;     // Infeasible: (u, s) in reduced coordinates with s = -<u, b-part>
  bool borderline = false;
  std::vector<std::string> log;
};

// Minimal face of K containing (R(A) + b) and K, with a relative interior
// slack. Works in reduced coordinates of successively smaller faces.
template <class T>
FRResult<T> facial_reduction(const ConeSpec& k, const std::vector<Vec<T>>& a, const Vec<T>& b, const Ctx& ctx);

// Homogeneous variant: minimal face of K containing S and K.
template <class T>
FRResult<T> facial_reduction_subspace(const ConeSpec& k, const Subspace<T>& s, const Ctx& ctx);

// Re-checks each exposing functional of a chain (nonzero, in the dual of the
// current reduced cone, orthogonal to the current reduced subspace).
template <class T>
bool verify_fr_chain(const ConeSpec& k, const std::vector<Vec<T>>& a, const Vec<T>& b, const FRResult<T>& fr,
                     const Tolerance& tol, std::string* why = nullptr);

template <class T>
OracleResult<T> subspace_meets_cone_outside_face(const Subspace<T>& s, const ConeSpec& k, const FaceDescriptor<T>& f,
                                                 const Ctx& ctx);

// Test-grade search for v in span(gens) with v in cl dir \ dir. Exact checks.
template <class T>
std::optional<Vec<T>> brute_frontier_search(const std::vector<Vec<T>>& gens, const ConeSpec& k,
                                            const FaceDescriptor<T>& f, int budget, std::uint64_t seed,
                                            const Tolerance& tol);

// Rational candidates close to a float vector, scaled so the largest entry is 1.
std::vector<Vec<Rational>> rational_candidates(const Vec<double>& c);

}  // namespace conicd
