#include "conicd/demo.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#ifndef CONICD_FIXTURE_DIR
#define CONICD_FIXTURE_DIR "fixtures"
#endif

namespace conicd {

namespace {

using Q = Rational;
const Tolerance kExact{0, 0, 0};

Vec<Q> qv(std::initializer_list<Q> xs) { return Vec<Q>(xs); }

bool positive_multiple(const Vec<Q>& a, const Vec<Q>& b) {
  if (a.size() != b.size()) return false;
  Q ratio = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (sgn(b[i]) == 0) {
      if (sgn(a[i]) != 0) return false;
      continue;
    }
    Q r = a[i] / b[i];
    if (sgn(ratio) == 0) ratio = r;
    if (r != ratio) return false;
  }
  return sgn(ratio) > 0;
}

std::string vstr(const Vec<Q>& v) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << Field<Q>::str(v[i]);
  os << ")";
  return os.str();
}

// Directions of the affine hull of the feasible slacks: A dx with A dx in span F.
std::vector<Vec<Q>> hull_directions(const PrimalSystem<Q>& p, const FRResult<Q>& fr, std::vector<Vec<Q>>* dxs) {
  int m = p.m(), d = p.k.dim(), f = fr.face.map.cols();
  Mat<Q> big(d, m + f);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < d; ++i) big(i, j) = p.a[j][i];
  for (int c = 0; c < f; ++c)
    for (int i = 0; i < d; ++i) big(i, m + c) = -fr.face.map(i, c);
  Subspace<Q> ns = nullspace(big, kExact);
  std::vector<Vec<Q>> out;
  for (const auto& w : ns.basis) {
    Vec<Q> dx(w.begin(), w.begin() + m);
    Vec<Q> dir(d, Q(0));
    for (int j = 0; j < m; ++j) dir = axpy(dir, dx[j], p.a[j]);
    out.push_back(dir);
    if (dxs) dxs->push_back(dx);
  }
  return out;
}

}  // namespace

template <class T>
std::optional<T> constant_primal_value(const PrimalSystem<T>& p, const Vec<T>& c, const Ctx& ctx) {
  if constexpr (!Field<T>::exact) {
    return std::nullopt;
  } else {
    FRResult<Q> fr = facial_reduction(p.k, p.a, p.b, ctx);
    if (fr.status != OracleStatus::Feasible) return std::nullopt;
    std::vector<Vec<Q>> dxs;
    hull_directions(p, fr, &dxs);
    for (const auto& dx : dxs)
      if (sgn(dot(c, dx)) != 0) return std::nullopt;
    return dot(c, fr.x);
  }
}

std::string default_fixture_dir() { return CONICD_FIXTURE_DIR; }

std::vector<Fixture> builtin_fixtures() {
  std::vector<Fixture> fx;
  {
    Fixture f;
    f.name = "example1";
    f.file = "example1.cpa";
    f.verdict = Classification::BadlyBehaved;
    f.direction = qv({0, 1, 0});
    f.z_normal = qv({1, 0, 0});
    f.primal_value = 0;
    f.dual_value = 0;
    f.dual_attained = false;
    // [[1/t, 1/2], [1/2, t/4]] is PSD (determinant 0) with <A1, Y> = 1 and <B, Y> = 1/t.
    f.family = [](const Q& t) { return qv({Q(1 / t), Q(1, 2), Q(t / 4)}); };
    f.bad_objective = qv({1});
    fx.push_back(f);
  }
  {
    Fixture f;
    f.name = "example2";
    f.file = "example2.cpa";
    f.verdict = Classification::BadlyBehaved;
    f.direction = qv({0, 0, 1, 1, 0, 0});
    f.z_normal = qv({1, 0, 0, 1, 0, 0});
    f.primal_value = 0;
    f.dual_value = 1;
    f.bad_objective = qv({0, 1});
    fx.push_back(f);
  }
  {
    Fixture f;
    f.name = "wellbehaved3";
    f.file = "wellbehaved3.cpa";
    f.verdict = Classification::WellBehaved;
    f.u = qv({0, 0, 0, 1, 0, 1});
    f.primal_value = 0;
    f.dual_value = 0;
    fx.push_back(f);
  }
  {
    Fixture f;
    f.name = "example4";
    f.file = "example4.cpa";
    f.verdict = Classification::BadlyBehaved;
    f.direction = qv({0, 0, 1});
    f.z_normal = qv({1, 1, 0});
    f.primal_value = 0;
    f.dual_value = 0;
    f.dual_attained = false;
    f.family = [](const Q& i) { return qv({Q(i + 1 / i), Q(-i), 1}); };
    f.bad_objective = qv({1});
    fx.push_back(f);
  }
  {
    Fixture f;
    f.name = "example5";
    f.file = "example5.cpa";
    f.verdict = Classification::BadlyBehaved;
    f.direction = qv({0, 0, 1, 0, 1});
    f.primal_value = 0;
    f.dual_value = 1;
    fx.push_back(f);
  }
  return fx;
}

FixtureReport run_fixture(const Fixture& fx, const std::string& dir, const Ctx& ctx) {
  FixtureReport rep;
  rep.name = fx.name;
  auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
    rep.checks.push_back({name, ok, detail});
    rep.ok = rep.ok && ok;
  };
  Instance<Q> in;
  try {
    std::string text = read_file(dir + "/" + fx.file);
    in = build_instance<Q>(parse_cpa(text));
    rep.detail["digest"] = sha256_hex(text);
  } catch (const std::exception& e) {
    check("load", false, e.what());
    return rep;
  }
  PrimalSystem<Q> p = analyzed_system(in, kExact);
  long unknown_before = ctx.stats.unknown.load();
  Verdict<Q> v;
  try {
    v = classify(p, std::nullopt, ctx);
  } catch (const std::exception& e) {
    check("classify", false, e.what());
    return rep;
  }
  check("verdict", v.cls == fx.verdict, classification_name(v.cls));
  rep.detail["verdict"] = classification_name(v.cls);
  rep.detail["certificate"] = certificate_json(v);

  if (v.bad) {
    VerifyReport vr = verify_certificate(p, *v.bad, kExact);
    check("certificate verifies", vr.ok, vr.failure);
    if (fx.direction) check("direction", positive_multiple(v.bad->v, *fx.direction), vstr(v.bad->v));
    if (fx.z_normal) check("normalized slack", v.bad->z_normal == *fx.z_normal, vstr(v.bad->z_normal));
    if (fx.bad_objective && in.objective) {
      auto o = propose_bad_objective(p, *v.bad, v.slack.x, kExact);
      check("bad objective", o.frontier && positive_multiple(o.c, *fx.bad_objective), vstr(o.c));
    }
  }
  if (v.good) {
    VerifyReport vr = verify_certificate(p, *v.good, kExact);
    check("certificate verifies", vr.ok, vr.failure);
    if (fx.u) check("u", positive_multiple(v.good->u, *fx.u), vstr(v.good->u));
  }

  std::optional<Q> pv;
  if (in.objective && fx.primal_value) {
    pv = constant_primal_value(p, *in.objective, ctx);
    check("primal value", pv && *pv == *fx.primal_value, pv ? Field<Q>::str(*pv) : "not constant on the feasible set");
    if (pv) rep.detail["primal_value"] = Field<Q>::str(*pv);
  }

  // Dual: { y in K* : <a_i, y> = c_i }, minimize <b, y>.
  if (in.objective && fx.dual_value) {
    DualFormSystem<Q> d{p.k, p.a, *in.objective};
    const Q& target = *fx.dual_value;
    bool value_ok = false;
    std::string how;
    PrimalSystem<Q> dp;
    try {
      dp = dual_to_primal(d, kExact);
      FRResult<Q> fr = facial_reduction(dp.k, dp.a, dp.b, ctx);
      if (fr.status == OracleStatus::Feasible) {
        // Objective constant on the dual feasible set, or attained at the weak-duality bound.
        bool constant = true;
        for (const auto& dir : hull_directions(dp, fr, nullptr)) constant = constant && sgn(pair(p.k, p.b, dir)) == 0;
        Q at = pair(p.k, p.b, fr.slack);
        if (constant) {
          value_ok = at == target && fx.dual_attained;
          how = "constant on the dual feasible set: " + Field<Q>::str(at);
        } else if (fx.dual_attained) {
          DualFormSystem<Q> lvl = d;
          lvl.a.push_back(p.b);
          lvl.c.push_back(target);
          try {
            PrimalSystem<Q> lp = dual_to_primal(lvl, kExact);
            auto ms = find_max_slack(lp, std::nullopt, ctx);
            value_ok = pv && *pv == target;
            how = "attained at the weak duality bound by " + vstr(ms.z);
          } catch (const std::exception& e) {
            how = std::string("level set empty: ") + e.what();
          }
        } else {
          how = "objective varies on the dual feasible set";
          value_ok = true;  // settled by the family and attainment checks below
        }
      } else {
        how = "dual infeasible";
      }
    } catch (const std::exception& e) {
      how = e.what();
    }
    check("dual value", value_ok, how);
    rep.detail["dual_value"] = Field<Q>::str(target);
    if (fx.primal_value) rep.detail["gap"] = Field<Q>::str(Q(target - *fx.primal_value));

    if (fx.family) {
      bool ok = true;
      std::ostringstream os;
      Q prev = -1;
      for (long t : {10L, 100L, 1000L, 10000L}) {
        Vec<Q> y = fx.family(Q(t));
        bool feas = member(p.k.dual(), y, false, kExact);
        for (size_t i = 0; i < p.a.size(); ++i) feas = feas && pair(p.k, p.a[i], y) == (*in.objective)[i];
        Q obj = pair(p.k, p.b, y);
        double gap = Q(obj - target).get_d();
        bool mono = sgn(prev) < 0 || obj < prev;
        ok = ok && feas && mono && gap > 0 && gap <= 1.0 / double(t) + 1e-9;
        os << "t=" << t << " obj=" << Field<Q>::str(obj) << (feas ? "" : " infeasible") << "; ";
        prev = obj;
      }
      check("asymptotic family", ok, os.str());
      // <b, y> - <c, x> = <z, y> >= 0 for feasible x, y, so the primal value bounds the infimum below.
      bool wd = pv && *pv == target;
      for (long t : {10L, 100L, 1000L, 10000L}) {
        Vec<Q> y = fx.family(Q(t));
        Q lhs = pair(p.k, p.b, y) - dot(*in.objective, v.slack.x);
        wd = wd && lhs == pair(p.k, v.slack.z, y) && sgn(lhs) >= 0;
      }
      check("weak duality bound", wd, "infimum equals the computed primal value");
    }
    if (!fx.dual_attained) {
      DualFormSystem<Q> lvl = d;
      lvl.a.push_back(p.b);
      lvl.c.push_back(target);
      bool empty = false;
      std::string why;
      try {
        PrimalSystem<Q> lp = dual_to_primal(lvl, kExact);
        find_max_slack(lp, std::nullopt, ctx);
        why = "found a dual point at the limit";
      } catch (const SystemInfeasible& e) {
        empty = true;
        why = e.what();
      } catch (const InconsistentObjective& e) {
        empty = true;
        why = e.what();
      } catch (const std::exception& e) {
        why = e.what();
      }
      check("not attained", empty, why);
    }
  }
  long unknown = ctx.stats.unknown.load() - unknown_before;
  check("no undecided oracle calls", unknown == 0, std::to_string(unknown));
  check("no borderline flags", std::find(v.caveats.begin(), v.caveats.end(), caveat::kBorderline) == v.caveats.end());
  return rep;
}

void require_fixture(const Fixture& f, const std::string& dir, const Ctx& ctx) {
  FixtureReport r = run_fixture(f, dir, ctx);
  if (r.ok) return;
  std::ostringstream os;
  os << f.name << ":";
  for (const auto& c : r.checks)
    if (!c.ok) os << " [" << c.name << ": " << c.detail << "]";
  throw FixtureMismatch(os.str());
}

std::vector<FixtureReport> run_demo(const std::string& dir, int threads, std::uint64_t seed) {
  std::vector<Fixture> fx = builtin_fixtures();
  std::vector<FixtureReport> out(fx.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i; (i = next++) < fx.size();) {
      Ctx ctx;
      ctx.seed = seed;
      out[i] = run_fixture(fx[i], dir, ctx);
    }
  };
  int n = std::max(1, std::min<int>(threads, static_cast<int>(fx.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

template std::optional<double> constant_primal_value(const PrimalSystem<double>&, const Vec<double>&, const Ctx&);
template std::optional<Rational> constant_primal_value(const PrimalSystem<Rational>&, const Vec<Rational>&,
                                                       const Ctx&);

}  // namespace conicd
