#include "conicd/systems.hpp"

namespace conicd {

const char* slack_status_name(SlackStatus s) {
  switch (s) {
    case SlackStatus::UserClaimedVerifiedFeasible: return "user-claimed-verified-feasible";
    case SlackStatus::HeuristicMaximal: return "heuristic-maximal";
    case SlackStatus::OracleCertifiedMaximal: return "oracle-certified-maximal";
  }
  return "?";
}

const char* max_check_name(MaxCheck c) {
  switch (c) {
    case MaxCheck::CertifiedMaximal: return "certified-maximal";
    case MaxCheck::Refuted: return "refuted";
    case MaxCheck::Unknown: return "unknown";
  }
  return "?";
}

template <class T>
void validate(const PrimalSystem<T>& p) {
  validate(p.k);
  int d = p.k.dim();
  if (p.a.empty()) throw DimensionMismatch("system needs at least one constraint element");
  if (static_cast<int>(p.b.size()) != d) throw DimensionMismatch("right-hand side does not match the cone");
  for (const auto& ai : p.a)
    if (static_cast<int>(ai.size()) != d) throw DimensionMismatch("constraint element does not match the cone");
  if constexpr (!Field<T>::exact) {
    auto fin = [](const Vec<double>& v) {
      for (double x : v)
        if (!std::isfinite(x)) throw NonFinite("non-finite system entry");
    };
    fin(p.b);
    for (const auto& ai : p.a) fin(ai);
  }
}

template <class T>
Vec<T> slack_of(const PrimalSystem<T>& p, const Vec<T>& x) {
  if (static_cast<int>(x.size()) != p.m()) throw DimensionMismatch("slack_of: x has the wrong length");
  Vec<T> z = p.b;
  if (static_cast<int>(z.size()) != p.k.dim()) throw DimensionMismatch("slack_of: right-hand side does not match");
  for (int i = 0; i < p.m(); ++i) {
    if (static_cast<int>(p.a[i].size()) != p.k.dim()) throw DimensionMismatch("slack_of: element does not match");
    z = axpy(z, T(-x[i]), p.a[i]);
  }
  return z;
}

namespace {

template <class T>
Tolerance check_tol(const Ctx& ctx) {
  return Field<T>::exact ? Tolerance{0, 0, 0} : ctx.tol;
}

}  // namespace

template <class T>
MaxSlack<T> find_max_slack(const PrimalSystem<T>& p, const std::optional<std::type_identity_t<Vec<T>>>& x0,
                           const Ctx& ctx) {
  validate(p);
  Tolerance ct = check_tol<T>(ctx);
  MaxSlack<T> ms;
  std::optional<Vec<T>> seed_slack;
  if (x0) {
    Vec<T> z0 = slack_of(p, *x0);
    if (!member(p.k, z0, false, ct, &ctx.caveats)) throw std::invalid_argument("seed point is not feasible");
    seed_slack = z0;
    ms.encountered.push_back(z0);
    ms.log.push_back("seed slack accepted");
  }
  FRResult<T> fr = facial_reduction(p.k, p.a, p.b, ctx);
  ms.borderline = fr.borderline;
  for (const auto& l : fr.log) ms.log.push_back(l);
  if (fr.status == OracleStatus::Infeasible) {
    double res = 0;
    if (!fr.certificate.empty()) {
      double mx = max_abs(fr.certificate);
      res = mx > 0 ? -Field<T>::to_double(fr.certificate.back()) / mx : 0;
    }
    throw SystemInfeasible("system has no feasible slack", res);
  }
  if (fr.status == OracleStatus::Unknown) {
    if (!seed_slack) throw OracleUndecided("maximum slack search undecided");
    ms.z = *seed_slack;
    ms.x = *x0;
    ms.face = minimal_face(p.k, ms.z, ct, &ctx.caveats);
    ms.status = SlackStatus::HeuristicMaximal;
    ms.fr = fr;
    ctx.caveats.add(caveat::kConditional);
    ms.log.push_back("falling back to the seed slack");
    return ms;
  }
  ms.z = fr.slack;
  ms.x = fr.x;
  ms.encountered.push_back(fr.slack);
  ms.face = minimal_face(p.k, ms.z, ct, &ctx.caveats);
  std::string why;
  bool ok = verify_fr_chain(p.k, p.a, p.b, fr, ctx.tol, &why);
  ms.status = ok ? SlackStatus::OracleCertifiedMaximal : SlackStatus::HeuristicMaximal;
  if (!ok) {
    ms.log.push_back("reduction chain failed re-check: " + why);
    ctx.caveats.add(caveat::kConditional);
  }
  if (ms.borderline) ctx.caveats.add(caveat::kBorderline);
  if (seed_slack && !face_contains(p.k, ms.face, minimal_face(p.k, *seed_slack, ct), ct))
    ms.log.push_back("warning: seed face not contained in the computed face");
  ms.fr = std::move(fr);
  return ms;
}

template <class T>
MaxVerification<T> verify_max_slack(const PrimalSystem<T>& p, const Vec<T>& z, const Ctx& ctx) {
  validate(p);
  Tolerance ct = check_tol<T>(ctx);
  MaxVerification<T> mv;
  auto refute = [&](const char* why) {
    mv.result = MaxCheck::Refuted;
    mv.reason = why;
    FRResult<T> fr = facial_reduction(p.k, p.a, p.b, ctx);
    if (fr.status == OracleStatus::Feasible) mv.better = fr.slack;
    return mv;
  };
  if (static_cast<int>(z.size()) != p.k.dim()) throw DimensionMismatch("claimed slack does not match the cone");
  if (!member(p.k, z, false, ct, &ctx.caveats)) return refute("claimed slack is not in the cone");
  if (!solve_in_span(p.a, sub(p.b, z), ct)) return refute("claimed slack is not of the form b - Ax");
  FaceDescriptor<T> f = minimal_face(p.k, z, ct, &ctx.caveats);
  std::vector<Vec<T>> gens = p.a;
  gens.push_back(p.b);
  Subspace<T> rab = span(p.k.dim(), gens, ctx.tol);
  OracleResult<T> o = subspace_meets_cone_outside_face(rab, p.k, f, ctx);
  if (o.borderline) ctx.caveats.add(caveat::kBorderline);
  switch (o.status) {
    case OracleStatus::Infeasible: mv.result = MaxCheck::CertifiedMaximal; break;
    case OracleStatus::Unknown: mv.reason = "oracle undecided"; break;
    case OracleStatus::Feasible: {
      // w = sum a_i A_i + beta b in K outside lin F; move z toward it and
      // rescale back onto b + R(A).
      auto coef = solve_in_span(gens, o.witness, ctx.tol);
      if (!coef) {
        mv.reason = "witness outside R(A,b)";
        break;
      }
      T beta = coef->back();
      T t = Field<T>::sign(beta, 0.0) >= 0 ? T(1) : T(T(-1) / (T(2) * beta));
      Vec<T> num = axpy(z, t, o.witness);
      T den = T(1) + t * beta;
      mv.better = scale(num, T(T(1) / den));
      mv.result = MaxCheck::Refuted;
      mv.reason = "a feasible slack with a larger face exists";
      break;
    }
  }
  return mv;
}

template <class T>
MaxSlack<T> max_slack_from_claim(const PrimalSystem<T>& p, const Vec<T>& z, const Ctx& ctx) {
  validate(p);
  Tolerance ct = check_tol<T>(ctx);
  if (static_cast<int>(z.size()) != p.k.dim()) throw DimensionMismatch("claimed slack does not match the cone");
  if (!member(p.k, z, false, ct, &ctx.caveats)) throw std::invalid_argument("claimed slack is not in the cone");
  auto xs = solve_in_span(p.a, sub(p.b, z), ct);
  if (!xs) throw std::invalid_argument("claimed slack is not of the form b - Ax");
  MaxSlack<T> ms;
  ms.z = z;
  ms.x = *xs;
  ms.face = minimal_face(p.k, z, ct, &ctx.caveats);
  ms.encountered.push_back(z);
  MaxVerification<T> mv = verify_max_slack(p, z, ctx);
  switch (mv.result) {
    case MaxCheck::CertifiedMaximal:
      ms.status = SlackStatus::OracleCertifiedMaximal;
      ms.log.push_back("claimed slack certified maximal");
      break;
    case MaxCheck::Unknown:
      ms.status = SlackStatus::UserClaimedVerifiedFeasible;
      ctx.caveats.add(caveat::kConditional);
      ms.log.push_back("claimed slack feasible; maximality unverified");
      break;
    case MaxCheck::Refuted:
      throw std::invalid_argument("claimed slack is not maximal");
  }
  return ms;
}

template <class T>
SubspaceSystem<T> to_subspace(const PrimalSystem<T>& p, const Tolerance& tol) {
  validate(p);
  return {p.k, p.b, span(p.k.dim(), p.a, tol)};
}

template <class T>
PrimalSystem<T> to_primal(const SubspaceSystem<T>& s) {
  PrimalSystem<T> p{s.k, s.l.basis, s.z0};
  // An empty L still needs one (zero) constraint element.
  if (p.a.empty()) p.a.push_back(Vec<T>(s.k.dim(), T(0)));
  return p;
}

template <class T>
PrimalSystem<T> dual_to_primal(const DualFormSystem<T>& d, const Tolerance& tol) {
  validate(d.k);
  int dim = d.k.dim(), m = static_cast<int>(d.a.size());
  if (static_cast<int>(d.c.size()) != m) throw DimensionMismatch("objective length does not match the map");
  for (const auto& ai : d.a)
    if (static_cast<int>(ai.size()) != dim) throw DimensionMismatch("constraint element does not match the cone");
  // Minimum-norm y0 = sum lambda_j a_j with Gram(lambda) = c.
  Mat<T> g(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) g(i, j) = pair(d.k, d.a[i], d.a[j]);
  auto lam = solve_linear(g, d.c, tol);
  if (!lam) throw InconsistentObjective("no y with A*y = c");
  Vec<T> y0(dim, T(0));
  for (int j = 0; j < m; ++j) y0 = axpy(y0, (*lam)[j], d.a[j]);
  for (int i = 0; i < m; ++i)
    if (!Field<T>::is_zero(T(pair(d.k, d.a[i], y0) - d.c[i]), tol.feas * std::max(1.0, max_abs(d.c))))
      throw InconsistentObjective("no y with A*y = c");
  Subspace<T> nb = pair_complement(d.k, span(dim, d.a, tol), tol);
  PrimalSystem<T> p;
  p.k = d.k.dual();
  p.a = nb.basis;
  if (p.a.empty()) p.a.push_back(Vec<T>(dim, T(0)));
  p.b = y0;
  return p;
}

template <class T>
TranslationReport value_translation(const PrimalSystem<T>& p, const SubspaceSystem<T>& q, const Vec<T>& y0,
                                    const Vec<T>& x, const Tolerance& tol) {
  validate(p);
  Subspace<T> ra = span(p.k.dim(), p.a, tol);
  if (!(p.k == q.k) || !subspace_equal(ra, span(q.k.dim(), q.l.basis, tol), tol) ||
      !contains(ra, sub(p.b, q.z0), tol))
    throw NotEquivalentForms("systems do not describe the same affine set");
  Vec<T> z = slack_of(p, x);
  T cx(0);
  for (int i = 0; i < p.m(); ++i) cx += pair(p.k, p.a[i], y0) * x[i];
  T lhs = cx + pair(p.k, y0, z);
  T rhs = pair(p.k, y0, q.z0);
  TranslationReport r;
  r.lhs = Field<T>::to_double(lhs);
  r.rhs = Field<T>::to_double(rhs);
  if constexpr (Field<T>::exact) {
    r.residual = Field<T>::to_double(T(lhs - rhs));
    r.ok = lhs == rhs;
  } else {
    r.residual = lhs - rhs;
    r.ok = std::fabs(r.residual) <= 1e-10 * std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
  }
  return r;
}

#define CONICD_INST(T)                                                                                           \
  template void validate(const PrimalSystem<T>&);                                                               \
  template Vec<T> slack_of(const PrimalSystem<T>&, const Vec<T>&);                                              \
  template MaxSlack<T> find_max_slack(const PrimalSystem<T>&, const std::optional<Vec<T>>&, const Ctx&);        \
  template MaxVerification<T> verify_max_slack(const PrimalSystem<T>&, const Vec<T>&, const Ctx&);               \
  template MaxSlack<T> max_slack_from_claim(const PrimalSystem<T>&, const Vec<T>&, const Ctx&);                  \
  template SubspaceSystem<T> to_subspace(const PrimalSystem<T>&, const Tolerance&);                             \
  template PrimalSystem<T> to_primal(const SubspaceSystem<T>&);                                                 \
  template PrimalSystem<T> dual_to_primal(const DualFormSystem<T>&, const Tolerance&);                          \
  template TranslationReport value_translation(const PrimalSystem<T>&, const SubspaceSystem<T>&, const Vec<T>&, \
                                               const Vec<T>&, const Tolerance&);
CONICD_INST(double)
CONICD_INST(Rational)
#undef CONICD_INST

}  // namespace conicd
