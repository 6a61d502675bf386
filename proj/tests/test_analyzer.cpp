#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conicd/analyzer.hpp"
#include "support.hpp"

using namespace conicd;
using namespace conicd::testing;

namespace {

using Q = Rational;
const Tolerance exact{0, 0, 0};

Vec<Q> qv(std::initializer_list<Q> xs) { return Vec<Q>(xs); }

PrimalSystem<Q> first_example() { return {ConeSpec{{Block::psd(2)}}, {qv({0, 1, 0})}, qv({1, 0, 0})}; }

// Packed PSD(3): (11, 12, 13, 22, 23, 33).
PrimalSystem<Q> second_example() {
  return {ConeSpec{{Block::psd(3)}}, {qv({1, 0, 0, 0, 0, 0}), qv({0, 0, 1, 1, 0, 0})}, qv({1, 0, 0, 1, 0, 0})};
}

PrimalSystem<Q> good3() { return {ConeSpec{{Block::psd(3)}}, {qv({0, 0, 0, 0, 1, 0})}, qv({1, 0, 0, 0, 0, 0})}; }

PrimalSystem<Q> soc_example() { return {ConeSpec{{Block::soc(3)}}, {qv({0, 0, 1})}, qv({1, 1, 0})}; }

PrimalSystem<Q> two_soc_example() {
  return {ConeSpec{{Block::soc(3), Block::soc(2)}}, {qv({1, 1, 0, 1, -1}), qv({0, 0, 1, 0, 1})},
          qv({1, 1, 0, 1, 0})};
}

PrimalSystem<Q> pcone_example() { return {ConeSpec{{Block::pcone(3, 3)}}, {qv({0, 0, 1})}, qv({1, 1, 0})}; }

template <class U>
PrimalSystem<U> convert_system(const PrimalSystem<Q>& p) {
  PrimalSystem<U> out{p.k, {}, convert_vec<Q, U>(p.b)};
  for (const auto& a : p.a) out.a.push_back(convert_vec<Q, U>(a));
  return out;
}

template <class T>
bool parallel(const Vec<T>& a, const Vec<T>& b) {
  return span(static_cast<int>(a.size()), std::vector<Vec<T>>{a, b}, exact).dim() == 1;
}

}  // namespace

TEST_CASE("bad semidefinite examples") {
  Ctx ctx;
  auto v1 = classify(first_example(), std::nullopt, ctx);
  REQUIRE(v1.cls == Classification::BadlyBehaved);
  CHECK(v1.bad->tag == BadCase::TangentCase);
  CHECK(parallel(v1.bad->v, qv({0, 1, 0})));
  CHECK(v1.bad->form == NormalForm::Vform);
  CHECK(v1.bad->v_normal == qv({0, 1, 0}));
  CHECK(v1.bad->z_normal == qv({1, 0, 0}));
  CHECK(v1.bad->alpha == 0);
  CHECK(v1.caveats.empty());
  CHECK(verify_certificate(first_example(), *v1.bad, exact).ok);

  auto v2 = classify(second_example(), std::nullopt, ctx);
  REQUIRE(v2.cls == Classification::BadlyBehaved);
  CHECK(parallel(v2.bad->v, qv({0, 0, 1, 1, 0, 0})));
  CHECK(v2.bad->form == NormalForm::Vform);
  CHECK(v2.bad->z_normal == qv({1, 0, 0, 1, 0, 0}));
  // Normal form: column r+1 of V12 is e1, V_{r+1,r+1} = 0.
  Sym<Q> vn = Sym<Q>(3, v2.bad->v_normal);
  CHECK(vn(0, 2) == 1);
  CHECK(vn(1, 2) == 0);
  CHECK(vn(2, 2) == 0);
  CHECK(verify_certificate(second_example(), *v2.bad, exact).ok);
}

TEST_CASE("good examples") {
  Ctx ctx;
  auto g = classify(good3(), std::nullopt, ctx);
  REQUIRE(g.cls == Classification::WellBehaved);
  CHECK(g.good->z == qv({1, 0, 0, 0, 0, 0}));
  CHECK(g.good->u == qv({0, 0, 0, 1, 0, 1}));
  CHECK(verify_certificate(good3(), *g.good, exact).ok);

  PrimalSystem<Q> slater{ConeSpec{{Block::psd(2)}}, {qv({1, 0, 0})}, qv({1, 0, 1})};
  auto s = classify(slater, std::nullopt, ctx);
  REQUIRE(s.cls == Classification::WellBehaved);
  CHECK(is_zero_vec(s.good->u, 0));

  // Orthant: u is supported on the zero coordinates of z.
  PrimalSystem<Q> orth{ConeSpec{{Block::orthant(3)}}, {qv({1, 0, 0}), qv({0, 1, 0})}, qv({1, 1, 0})};
  auto o = classify(orth, std::nullopt, ctx);
  REQUIRE(o.cls == Classification::WellBehaved);
  CHECK(o.good->u == qv({0, 0, 1}));
  CHECK(verify_certificate(orth, *o.good, exact).ok);

  PrimalSystem<Q> soc_slater{ConeSpec{{Block::soc(3)}}, {qv({0, 0, 1})}, qv({2, 1, 0})};
  CHECK(classify(soc_slater, std::nullopt, ctx).cls == Classification::WellBehaved);
  PrimalSystem<Q> pc_interior{ConeSpec{{Block::pcone(3, 3)}}, {qv({0, 0, 1})}, qv({2, 1, 0})};
  CHECK(classify(pc_interior, std::nullopt, ctx).cls == Classification::WellBehaved);
}

TEST_CASE("second order cone examples") {
  Ctx ctx;
  auto s = socp_normalize(soc_example(), qv({1, 1, 0}), exact);
  CHECK(s.kinds == std::vector<char>{'R'});
  CHECK(s.system.b == qv({1, 1, 0}));

  auto s5 = socp_normalize(two_soc_example(), qv({1, 1, 0, 1, 0}), exact);
  CHECK(s5.kinds == std::vector<char>{'R', 'I'});
  auto s0 = socp_normalize(soc_example(), qv({0, 0, 0}), exact);
  CHECK(s0.kinds == std::vector<char>{'O'});

  auto v4 = classify(soc_example(), std::nullopt, ctx);
  REQUIRE(v4.cls == Classification::BadlyBehaved);
  CHECK(v4.bad->block == 0);
  CHECK(v4.bad->form == NormalForm::SocForm);
  CHECK(v4.bad->v_normal == qv({0, 0, 1}));
  CHECK(v4.bad->alpha == 0);
  CHECK(verify_certificate(soc_example(), *v4.bad, exact).ok);

  auto v5 = classify(two_soc_example(), std::nullopt, ctx);
  REQUIRE(v5.cls == Classification::BadlyBehaved);
  CHECK(v5.bad->z == qv({1, 1, 0, 1, 0}));
  CHECK(v5.bad->v == qv({0, 0, 1, 0, 1}));
  CHECK(v5.bad->block == 0);
  CHECK(verify_certificate(two_soc_example(), *v5.bad, exact).ok);
}

TEST_CASE("p-cone examples") {
  Ctx ctx;
  auto v = classify(pcone_example(), std::nullopt, ctx);
  REQUIRE(v.cls == Classification::BadlyBehaved);
  CHECK(v.bad->form == NormalForm::PConeShape);
  CHECK(parallel(v.bad->v, qv({0, 0, 1})));
  FaceDescriptor<Q> f = minimal_face(pcone_example().k, v.bad->z, exact);
  // Cross-check with a small step along v from a point beyond the face.
  CHECK(frontier_member(pcone_example().k, f, v.bad->v, exact));
  CHECK(verify_certificate(pcone_example(), *v.bad, exact).ok);

  // With p = 2 the p-cone path agrees with the second order cone path.
  PrimalSystem<Q> p2{ConeSpec{{Block::pcone(3, 2)}}, soc_example().a, soc_example().b};
  auto w = classify(p2, std::nullopt, ctx);
  auto s = classify(soc_example(), std::nullopt, ctx);
  REQUIRE(w.cls == Classification::BadlyBehaved);
  CHECK(w.bad->v == s.bad->v);
  CHECK(w.bad->z == s.bad->z);
  CHECK(w.bad->block == s.bad->block);
}

TEST_CASE("semidefinite normalization examples") {
  PrimalSystem<Q> p{ConeSpec{{Block::psd(2)}}, {qv({0, 1, 0})}, qv({1, 0, 0})};
  auto id = normalize_sdp(p, qv({1, 0, 0}), exact);
  CHECK(id.t == Mat<Q>::identity(2));
  CHECK(id.unit);

  PrimalSystem<double> pf{ConeSpec{{Block::psd(2)}}, {{0, 1, 0}}, {2, 0, 0}};
  auto sc = normalize_sdp(pf, Vec<double>{2, 0, 0}, Tolerance{});
  CHECK(sc.system.b[0] == doctest::Approx(1.0));
  CHECK(std::fabs(sc.system.b[1]) < 1e-12);
  CHECK(std::fabs(sc.t(0, 0)) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(std::fabs(sc.t(1, 1)) == doctest::Approx(1.0));

  // Exact mode keeps a non-square pivot as a scaled diagonal.
  PrimalSystem<Q> pq{ConeSpec{{Block::psd(2)}}, {qv({0, 1, 0})}, qv({2, 0, 0})};
  auto sq = normalize_sdp(pq, qv({2, 0, 0}), exact);
  CHECK_FALSE(sq.unit);
  CHECK(sq.system.b == qv({2, 0, 0}));

  // Eigenvalues {2, 0} of [[1,1],[1,1]]: slack diag(1, 0) after scaling.
  PrimalSystem<double> pr{ConeSpec{{Block::psd(2)}}, {{0, 1, 0}}, {1, 1, 1}};
  auto rot = normalize_sdp(pr, Vec<double>{1, 1, 1}, Tolerance{});
  CHECK(rot.system.b[0] == doctest::Approx(1.0));
  CHECK(std::fabs(rot.system.b[1]) < 1e-12);
  CHECK(std::fabs(rot.system.b[2]) < 1e-12);

  CHECK_THROWS_AS(normalize_sdp(soc_example(), qv({1, 1, 0}), exact), Unsupported);
}

TEST_CASE("scaled normal form when roots are irrational") {
  Ctx ctx;
  // Slack diag(2, 0): no rational square root, so the form keeps D.
  PrimalSystem<Q> p{ConeSpec{{Block::psd(2)}}, {qv({0, 1, 0})}, qv({2, 0, 0})};
  auto v = classify(p, std::nullopt, ctx);
  REQUIRE(v.cls == Classification::BadlyBehaved);
  CHECK(v.bad->form == NormalForm::ScaledVform);
  CHECK(v.bad->z_normal == qv({2, 0, 0}));
  CHECK(verify_certificate(p, *v.bad, exact).ok);
}

TEST_CASE("verification failures") {
  Ctx ctx;
  auto v = classify(first_example(), std::nullopt, ctx);
  REQUIRE(v.bad);
  BadCert<Q> c = *v.bad;
  c.form = NormalForm::None;
  c.v = qv({1, 0, 0});
  c.coords = qv({0, 1});
  auto r = verify_certificate(first_example(), c, exact);
  CHECK_FALSE(r.ok);
  CHECK(r.failure == "not frontier: direction is feasible");

  auto v2 = classify(second_example(), std::nullopt, ctx);
  BadCert<Q> d = *v.bad;
  d.v = v2.bad->v;
  auto r2 = verify_certificate(first_example(), d, exact);
  CHECK_FALSE(r2.ok);
  CHECK(r2.failure == "v not in span");

  BadCert<Q> e = *v.bad;
  e.z = qv({1, 0, -1});
  auto r3 = verify_certificate(first_example(), e, exact);
  CHECK_FALSE(r3.ok);
  CHECK(r3.failure == "slack not in cone");

  BadCert<Q> t = *v.bad;
  t.v_normal = qv({0, 2, 0});
  CHECK(verify_certificate(first_example(), t, exact).failure == "normal form replay mismatch");

  auto g = classify(good3(), std::nullopt, ctx);
  GoodCert<Q> gc = *g.good;
  gc.u = qv({0, 0, 0, 1, 0, -1});
  CHECK(verify_certificate(good3(), gc, exact).failure == "u not in the dual cone");
  gc = *g.good;
  gc.u = qv({0, 0, 0, 0, 0, 1});
  CHECK(verify_certificate(good3(), gc, exact).failure == "u not strictly complementary");
}

TEST_CASE("float and exact verdicts agree on the examples") {
  Ctx ctx;
  for (const auto& p : {first_example(), second_example(), good3(), soc_example(), two_soc_example()}) {
    auto q = classify(p, std::nullopt, ctx);
    auto f = classify(convert_system<double>(p), std::nullopt, ctx);
    CHECK(q.cls == f.cls);
    if (f.bad) CHECK(verify_certificate(convert_system<double>(p), *f.bad, ctx.tol).ok);
  }
}

TEST_CASE("verdict invariant under congruence and cone automorphisms") {
  Rng rng(7);
  Ctx ctx;
  for (int rep = 0; rep < 15; ++rep) {
    for (const auto& p : {first_example(), second_example(), good3()}) {
      int n = p.k.blocks[0].n;
      Mat<Q> t = rand_invertible_q(rng, n);
      PrimalSystem<Q> q{p.k, {}, psd_block(p.k, p.b, 0).congruence(t).packed()};
      for (const auto& a : p.a) q.a.push_back(psd_block(p.k, a, 0).congruence(t).packed());
      auto v = classify(q, std::nullopt, ctx);
      CHECK(v.cls == classify(p, std::nullopt, ctx).cls);
      if (v.bad) CHECK(verify_certificate(q, *v.bad, exact).ok);
      if (v.good) CHECK(verify_certificate(q, *v.good, exact).ok);
    }
  }
}

TEST_CASE("random systems: verdicts are certified") {
  Rng rng(11);
  Ctx ctx;
  int bad = 0, good = 0, undecided = 0;
  for (int rep = 0; rep < 120; ++rep) {
    ConeSpec k = rand_small_cone(rng);
    RandomSystem rs = rand_system(rng, k, rep % 2 == 0);
    auto v = classify(rs.p, std::nullopt, ctx);
    if (v.cls == Classification::Undecided) {
      ++undecided;
      MESSAGE("undecided: " << k.str() << " " << v.reason);
      continue;
    }
    if (v.bad) {
      ++bad;
      if (v.bad->available) CHECK(verify_certificate(rs.p, *v.bad, exact).ok);
    } else {
      ++good;
      CHECK(verify_certificate(rs.p, *v.good, exact).ok);
    }
    if (k.all_of(BlockKind::Orthant)) CHECK(v.cls == Classification::WellBehaved);
  }
  MESSAGE("bad " << bad << " good " << good << " undecided " << undecided);
  CHECK(undecided <= 3);
  CHECK(bad > 0);
  CHECK(good > 0);
}

TEST_CASE("complementarity verdict agrees with brute frontier search") {
  Rng rng(23);
  Ctx ctx;
  int agree = 0, total = 0;
  for (int rep = 0; rep < 60; ++rep) {
    ConeSpec k = rand_small_cone(rng);
    RandomSystem rs = rand_system(rng, k, true, 2);
    auto v = classify(rs.p, std::nullopt, ctx);
    if (v.cls == Classification::Undecided) continue;
    std::vector<Vec<Q>> g = rs.p.a;
    g.push_back(rs.p.b);
    FaceDescriptor<Q> f = minimal_face(k, v.slack.z, exact);
    auto hit = brute_frontier_search(g, k, f, 2000, 5, exact);
    ++total;
    // A brute hit always means badly behaved; a miss is inconclusive.
    if (hit) {
      CHECK(v.cls == Classification::BadlyBehaved);
      ++agree;
    }
  }
  MESSAGE("brute hits " << agree << " of " << total);
}

TEST_CASE("dual form agrees with the primal reformulation") {
  Ctx ctx;
  // y in PSD(2) with 2 y12 = 1: the feasible set has rank-2 points.
  DualFormSystem<Q> d{ConeSpec{{Block::psd(2)}}, {qv({0, 1, 0})}, qv({1})};
  auto r = classify_dual_form(d, std::nullopt, ctx);
  CHECK(r.verdict.cls == classify(r.primal, std::nullopt, ctx).cls);
  CHECK(r.verdict.cls == Classification::WellBehaved);

  // Dual of the second example.
  DualFormSystem<Q> d2{ConeSpec{{Block::psd(3)}}, {qv({1, 0, 0, 0, 0, 0}), qv({0, 0, 1, 1, 0, 0})}, qv({0, 1})};
  auto r2 = classify_dual_form(d2, std::nullopt, ctx);
  CHECK(r2.verdict.cls == classify(r2.primal, std::nullopt, ctx).cls);
  CHECK(r2.verdict.cls != Classification::Undecided);
}

TEST_CASE("bad objective diagnostic on the fixtures") {
  Ctx ctx;
  for (const auto& p : {first_example(), second_example(), soc_example()}) {
    auto v = classify(p, std::nullopt, ctx);
    REQUIRE(v.bad);
    auto o = propose_bad_objective(p, *v.bad, v.slack.x, exact);
    CHECK(o.frontier);
  }
}

TEST_CASE("planted semidefinite structure is recovered") {
  Rng rng(31);
  Ctx ctx;
  for (int rep = 0; rep < 40; ++rep) {
    int n = 2 + rep % 3;
    int r = 1 + static_cast<int>(rng() % (n - 1));
    ConeSpec k{{Block::psd(n)}};
    Sym<Q> z(n);
    for (int i = 0; i < r; ++i) z(i, i) = 1;
    // Face-span generator: only the leading r x r block.
    Sym<Q> face(n);
    for (int i = 0; i < r; ++i)
      for (int j = i; j < r; ++j) face(i, j) = rand_rat(rng, -2, 2);
    bool plant_bad = rep % 2 == 0;
    Sym<Q> v = face;
    if (plant_bad) {
      v(0, r) = 1;
      for (int i = r + 1; i < n; ++i)
        for (int j = i; j < n; ++j) v(i, j) = i == j ? Q(rng() % 2) : Q(0);
    }
    Mat<Q> t = rand_invertible_q(rng, n);
    PrimalSystem<Q> p{k, {face.congruence(t).packed(), v.congruence(t).packed()}, z.congruence(t).packed()};
    auto vd = classify(p, std::nullopt, ctx);
    REQUIRE(vd.cls != Classification::Undecided);
    CHECK(vd.cls == (plant_bad ? Classification::BadlyBehaved : Classification::WellBehaved));
    CHECK(rank_of(psd_block(k, vd.slack.z, 0), exact) == r);
    if (vd.bad) CHECK(verify_certificate(p, *vd.bad, exact).ok);
    if (vd.good) CHECK(verify_certificate(p, *vd.good, exact).ok);
  }
}

TEST_CASE("planted second order cone structure is recovered") {
  Rng rng(37);
  Ctx ctx;
  for (int rep = 0; rep < 30; ++rep) {
    int m = 3 + rep % 3;
    ConeSpec k{{Block::soc(m), Block::soc(2)}};
    Vec<Q> z(m + 2, Q(0)), v(m + 2, Q(0)), w(m + 2, Q(0));
    z[0] = z[1] = 1;
    z[m] = 2;
    w[0] = w[1] = rand_rat(rng, -2, 2);
    w[m + 1] = rand_rat(rng, -2, 2);
    bool plant_bad = rep % 2 == 0;
    v = w;
    if (plant_bad) v[2 + rng() % (m - 2)] = rand_rat(rng, 1, 3);
    PrimalSystem<Q> p{k, {w, v}, z};
    auto vd = classify(p, std::nullopt, ctx);
    REQUIRE(vd.cls != Classification::Undecided);
    CHECK(vd.cls == (plant_bad ? Classification::BadlyBehaved : Classification::WellBehaved));
    if (vd.bad) {
      CHECK(vd.bad->block == 0);
      CHECK(verify_certificate(p, *vd.bad, exact).ok);
    }
  }
}

TEST_CASE("frontier direction outside the tangent space") {
  Ctx ctx;
  // V22 = diag(0, 1) is not zero, but V12 = e1 leaves the range of V22.
  PrimalSystem<Q> p{ConeSpec{{Block::psd(3)}}, {qv({0, 1, 0, 0, 0, 1})}, qv({1, 0, 0, 0, 0, 0})};
  auto v = classify(p, std::nullopt, ctx);
  REQUIRE(v.cls == Classification::BadlyBehaved);
  CHECK(v.bad->tag == BadCase::ComplementarityCase);
  CHECK(v.bad->available);
  CHECK(v.bad->form == NormalForm::Vform);
  CHECK(verify_certificate(p, *v.bad, exact).ok);
  auto f = classify(convert_system<double>(p), std::nullopt, ctx);
  CHECK(f.cls == Classification::BadlyBehaved);
}
