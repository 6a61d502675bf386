#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conicd/systems.hpp"

namespace conicd {

enum class Classification { WellBehaved, BadlyBehaved, Undecided };
const char* classification_name(Classification c);

enum class BadCase { TangentCase, ComplementarityCase };
const char* bad_case_name(BadCase c);

enum class TransformKind {
  Congruence,   // any invertible T (PSD: X -> T^T X T)
  Type1,        // I_r (+) P
  Type2,        // Q (+) I_{n-r}, Q orthogonal
  Permutation,  // PSD congruence by a permutation matrix
  SocRotation,  // symmetric T on one block with T K_i = K_i (x -> T x)
  Scaling       // positive rescaling of the certificate direction
};
const char* transform_name(TransformKind k);

template <class T>
struct TransformStep {
  TransformKind kind = TransformKind::Congruence;
  int block = 0;
  Mat<T> t;
  std::string note;
};

template <class T>
struct TransformLog {
  std::vector<TransformStep<T>> steps;
};

enum class NormalForm {
  None,         // mixed cones: raw certificate only
  Vform,        // SDP: Z = diag(I_r, 0), V in the canonical frontier shape
  ScaledVform,  // SDP, exact mode without rational square roots: diag(D, 0) and an unnormalized V12 column
  SocForm,      // SOCP: slack blocks 0 / (1; e1) / e1, v_j = (alpha; alpha; 1; ...)
  PConeShape    // p-cones: conjugate-vector conditions on the raw (z, v)
};
const char* normal_form_name(NormalForm n);

template <class T>
struct BadCert {
  Vec<T> z;
  Vec<T> v;
  Vec<T> coords;  // v = sum coords[i] a_i + coords[m] b
  BadCase tag = BadCase::TangentCase;
  int block = -1;  // first block where v is a frontier direction
  bool available = true;
  NormalForm form = NormalForm::None;
  TransformLog<T> log;
  Vec<T> z_normal, v_normal;
  T alpha = T(0);
  std::optional<FRResult<T>> maximality;
};

template <class T>
struct GoodCert {
  Vec<T> z;
  Vec<T> u;
  std::vector<Vec<T>> w_basis;  // span{a_i, b} intersected with tan(z, K)
  TransformLog<T> log;          // SDP only: congruence bringing z and u to block form
  Vec<T> z_normal, u_normal;
  std::optional<FRResult<T>> maximality;
};

template <class T>
struct Verdict {
  Classification cls = Classification::Undecided;
  std::optional<BadCert<T>> bad;
  std::optional<GoodCert<T>> good;
  std::vector<std::string> caveats;
  std::string reason;
  MaxSlack<T> slack;
  bool slack_computed = false;
};

struct ClassifyOptions {
  bool search = true;       // certificate construction and normal forms
  bool self_verify = true;  // run verify_certificate on the emitted certificate
};

template <class T>
Verdict<T> classify(const PrimalSystem<T>& p, const std::optional<std::type_identity_t<MaxSlack<T>>>& slack, const Ctx& ctx,
                    const ClassifyOptions& opt = {});

// SDP normalization of the slack: T^T z T = diag(I_r, 0), or diag(D, 0) in
// exact mode when the needed square roots are irrational.
template <class T>
struct SdpNormalization {
  PrimalSystem<T> system;
  Mat<T> t;
  TransformLog<T> log;
  Vec<T> d;  // diagonal of the leading block
  bool unit = false;
};
template <class T>
SdpNormalization<T> normalize_sdp(const PrimalSystem<T>& p, const Vec<T>& z, const Tolerance& tol);

// SOCP normalization: per-block symmetric automorphisms bringing z to the
// 0 / (1; e1) / e1 pattern. Index sets by block: 'O', 'R', 'I'.
template <class T>
struct SocNormalization {
  PrimalSystem<T> system;
  TransformLog<T> log;
  std::vector<char> kinds;
  std::vector<bool> normalized;  // interior blocks need a rational square root
};
template <class T>
SocNormalization<T> socp_normalize(const PrimalSystem<T>& p, const Vec<T>& z, const Tolerance& tol);

// Rebuilds the normal-form presentation of a bad certificate in place.
template <class T>
void present_bad_certificate(const PrimalSystem<T>& p, BadCert<T>& cert, const Ctx& ctx);

struct VerifyReport {
  bool ok = false;
  std::string failure;  // first failed check
  int checks = 0;  // checks passed before stopping
};

template <class T>
VerifyReport verify_certificate(const PrimalSystem<T>& p, const BadCert<T>& cert, const Tolerance& tol);
template <class T>
VerifyReport verify_certificate(const PrimalSystem<T>& p, const GoodCert<T>& cert, const Tolerance& tol);

// Dual-form SDP (or any cone): analysis through the equivalent primal system.
template <class T>
struct DualVerdict {
  Verdict<T> verdict;
  PrimalSystem<T> primal;
  T lambda = T(0);  // bad case: <a_i, V> = lambda c_i
};
template <class T>
DualVerdict<T> classify_dual_form(const DualFormSystem<T>& d, const std::optional<std::type_identity_t<Vec<T>>>& ybar, const Ctx& ctx,
                                  const ClassifyOptions& opt = {});

// Experimental: c_i = v_i + v_0 xbar_i, the certificate coefficients after
// contracting b onto the slack.
template <class T>
struct BadObjective {
  Vec<T> c;
  bool frontier = false;  // sum c_i a_i is a frontier direction at z
};
template <class T>
BadObjective<T> propose_bad_objective(const PrimalSystem<T>& p, const BadCert<T>& cert, const Vec<T>& xbar,
                                      const Tolerance& tol);

}  // namespace conicd
