#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "conicd/oracles.hpp"

namespace conicd {

struct SystemInfeasible : std::runtime_error {
  double residual;
  SystemInfeasible(const std::string& m, double r) : std::runtime_error(m), residual(r) {}
};
struct InconsistentObjective : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotEquivalentForms : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OracleUndecided : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// { x : sum_i x_i a_i <=_K b }
template <class T>
struct PrimalSystem {
  ConeSpec k;
  std::vector<Vec<T>> a;
  Vec<T> b;
  int m() const { return static_cast<int>(a.size()); }
};

// (z0 + L) and K
template <class T>
struct SubspaceSystem {
  ConeSpec k;
  Vec<T> z0;
  Subspace<T> l;
};

// { y in K* : <a_i, y> = c_i }
template <class T>
struct DualFormSystem {
  ConeSpec k;
  std::vector<Vec<T>> a;
  Vec<T> c;
};

template <class T>
void validate(const PrimalSystem<T>& p);

enum class SlackStatus { UserClaimedVerifiedFeasible, HeuristicMaximal, OracleCertifiedMaximal };
const char* slack_status_name(SlackStatus s);

template <class T>
struct MaxSlack {
  Vec<T> z;
  Vec<T> x;
  FaceDescriptor<T> face;
  SlackStatus status = SlackStatus::HeuristicMaximal;
  FRResult<T> fr;                     // reduction chain behind the slack, when computed
  std::vector<Vec<T>> encountered;    // feasible slacks seen during the run
  std::vector<std::string> log;
  bool borderline = false;
};

template <class T>
Vec<T> slack_of(const PrimalSystem<T>& p, const Vec<T>& x);

template <class T>
MaxSlack<T> find_max_slack(const PrimalSystem<T>& p, const std::optional<std::type_identity_t<Vec<T>>>& x0,
                           const Ctx& ctx);

enum class MaxCheck { CertifiedMaximal, Refuted, Unknown };
const char* max_check_name(MaxCheck c);

template <class T>
struct MaxVerification {
  MaxCheck result = MaxCheck::Unknown;
  Vec<T> better;  // Refuted: a feasible slack with a strictly larger face
  std::string reason;
};

template <class T>
MaxVerification<T> verify_max_slack(const PrimalSystem<T>& p, const Vec<T>& z, const Ctx& ctx);

// Slack supplied by the user: feasibility is checked, then maximality.
template <class T>
MaxSlack<T> max_slack_from_claim(const PrimalSystem<T>& p, const Vec<T>& z, const Ctx& ctx);

template <class T>
SubspaceSystem<T> to_subspace(const PrimalSystem<T>& p, const Tolerance& tol);
template <class T>
PrimalSystem<T> to_primal(const SubspaceSystem<T>& s);
template <class T>
PrimalSystem<T> dual_to_primal(const DualFormSystem<T>& d, const Tolerance& tol);

struct TranslationReport {
  double lhs = 0;  // <c, x> + <y0, z>
  double rhs = 0;  // <y0, z0>
  double residual = 0;
  bool ok = false;
};

// For x feasible in p with slack z and c = A* y0: <c,x> + <y0,z> = <y0,z0>.
template <class T>
TranslationReport value_translation(const PrimalSystem<T>& p, const SubspaceSystem<T>& q, const Vec<T>& y0,
                                    const Vec<T>& x, const Tolerance& tol);

}  // namespace conicd
