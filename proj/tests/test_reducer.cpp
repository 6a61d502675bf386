#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conicd/reducer.hpp"
#include "support.hpp"

using namespace conicd;
using namespace conicd::testing;

namespace {

using Q = Rational;
const Tolerance exact{0, 0, 0};

Vec<Q> qv(std::initializer_list<Q> xs) { return Vec<Q>(xs); }

PrimalSystem<Q> first_example() { return {ConeSpec{{Block::psd(2)}}, {qv({0, 1, 0})}, qv({1, 0, 0})}; }

PrimalSystem<Q> second_example() {
  return {ConeSpec{{Block::psd(3)}}, {qv({1, 0, 0, 0, 0, 0}), qv({0, 0, 1, 1, 0, 0})}, qv({1, 0, 0, 1, 0, 0})};
}

PrimalSystem<Q> soc_example() { return {ConeSpec{{Block::soc(3)}}, {qv({0, 0, 1})}, qv({1, 1, 0})}; }

PrimalSystem<Q> two_soc_example() {
  return {ConeSpec{{Block::soc(3), Block::soc(2)}}, {qv({1, 1, 0, 1, -1}), qv({0, 0, 1, 0, 1})},
          qv({1, 1, 0, 1, 0})};
}

bool same_system(const PrimalSystem<Q>& a, const PrimalSystem<Q>& b) {
  return a.k == b.k && a.a == b.a && a.b == b.b;
}

PrimalSystem<Q> congruent(const PrimalSystem<Q>& p, const Mat<Q>& t) {
  PrimalSystem<Q> q{p.k, {}, psd_block(p.k, p.b, 0).congruence(t).packed()};
  for (const auto& a : p.a) q.a.push_back(psd_block(p.k, a, 0).congruence(t).packed());
  return q;
}

BadCert<Q> bad_cert(const PrimalSystem<Q>& p) {
  Ctx ctx;
  auto v = classify(p, std::nullopt, ctx);
  REQUIRE(v.cls == Classification::BadlyBehaved);
  return *v.bad;
}

}  // namespace

TEST_CASE("elementary operations") {
  auto p = second_example();
  auto q = apply_op(p, ElementaryOp<Q>::delete_rows(0, {1}), exact);
  q = apply_op(q, ElementaryOp<Q>::delete_matrix(0), exact);
  CHECK(same_system(q, first_example()));

  auto id = apply_op(p, ElementaryOp<Q>::contraction(1, qv({0, 1}), qv({0, 0})), exact);
  CHECK(same_system(id, p));
  CHECK(same_system(apply_op(p, ElementaryOp<Q>::rotation(0, Mat<Q>::identity(3)), exact), p));

  CHECK_THROWS_AS(apply_op(p, ElementaryOp<Q>::contraction(0, qv({0, 1}), qv({0, 0})), exact), InvalidOp);
  CHECK_THROWS_AS(apply_op(p, ElementaryOp<Q>::rotation(0, Mat<Q>(3, 3)), exact), InvalidOp);
  CHECK_THROWS_AS(apply_op(p, ElementaryOp<Q>::delete_matrix(5), exact), InvalidOp);

  auto s = soc_example();
  CHECK_THROWS_AS(apply_op(s, ElementaryOp<Q>::delete_rows(0, {0}), exact), InvalidOp);
  Mat<Q> swap(3, 3);
  swap(0, 1) = swap(1, 0) = swap(2, 2) = 1;
  CHECK_THROWS_AS(apply_op(s, ElementaryOp<Q>::rotation(0, swap), exact), InvalidOp);
  Mat<Q> flip = Mat<Q>::identity(3);
  flip(2, 2) = -1;
  auto f = apply_op(s, ElementaryOp<Q>::rotation(0, flip), exact);
  CHECK(f.a[0] == qv({0, 0, -1}));

  // Whole blocks may go, first components alone may not.
  auto t = apply_op(two_soc_example(), ElementaryOp<Q>::delete_rows(1, {0, 1}), exact);
  CHECK(t.k == ConeSpec{{Block::soc(3)}});
  CHECK(t.b == qv({1, 1, 0}));

  // Contraction uses the matrices before the update.
  auto c = apply_op(p, ElementaryOp<Q>::contraction(0, qv({2, 1}), qv({-1, 0})), exact);
  CHECK(c.a[0] == qv({2, 0, 1, 1, 0, 0}));
  CHECK(c.b == qv({0, 0, 0, 1, 0, 0}));
}

TEST_CASE("canonical minor recognition") {
  CHECK(is_canonical_minor(minor_system(Q(5), false), exact) == Q(5));
  CHECK(is_canonical_minor(first_example(), exact) == Q(0));
  PrimalSystem<Q> slater{ConeSpec{{Block::psd(2)}}, {qv({0, 1, 0})}, qv({1, 0, 1})};
  CHECK_FALSE(is_canonical_minor(slater, exact));
  CHECK(is_canonical_minor(soc_example(), exact) == Q(0));
  PrimalSystem<Q> scaled{ConeSpec{{Block::psd(2)}}, {qv({3, 7, 0})}, qv({2, 0, 0})};
  CHECK(is_canonical_minor(scaled, exact) == Q(3, 2));
}

TEST_CASE("semidefinite reductions") {
  auto r1 = reduce_sdp(first_example(), bad_cert(first_example()), exact);
  CHECK(r1.alpha == 0);
  CHECK(r1.ops.empty());
  CHECK(r1.canonical);

  auto r2 = reduce_sdp(second_example(), bad_cert(second_example()), exact);
  CHECK(r2.alpha == 0);
  CHECK(r2.described == std::vector<std::string>{"DeleteMatrix(1)", "DeleteRowCol(2)"});
  CHECK(same_system(r2.terminal, first_example()));
  CHECK(same_system(replay(second_example(), r2.ops, exact), r2.terminal));

  Rng rng(3);
  Ctx ctx;
  for (int rep = 0; rep < 20; ++rep) {
    auto p = congruent(rep % 2 ? first_example() : second_example(), rand_invertible_q(rng, rep % 2 ? 2 : 3));
    auto tr = reduce_sdp(p, bad_cert(p), exact);
    CHECK(same_system(replay(p, tr.ops, exact), tr.terminal));
    CHECK(is_canonical_minor(tr.terminal, exact) == tr.alpha);
    CHECK(classify(tr.terminal, std::nullopt, ctx).cls == Classification::BadlyBehaved);
  }
}

TEST_CASE("second order cone reductions") {
  auto r4 = reduce_socp(soc_example(), bad_cert(soc_example()), exact);
  CHECK(r4.alpha == 0);
  CHECK(same_system(r4.terminal, soc_example()));

  auto r5 = reduce_socp(two_soc_example(), bad_cert(two_soc_example()), exact);
  CHECK(r5.alpha == 0);
  CHECK(r5.described == std::vector<std::string>{"DeleteColumn(1)", "DeleteBlock(2)"});
  CHECK(same_system(r5.terminal, soc_example()));

  // Rotated copies: reflections and positive scalings of the first example.
  Ctx ctx;
  for (Q s : {Q(1), Q(2), Q(1, 3)}) {
    Mat<Q> t = Mat<Q>::identity(3);
    t(2, 2) = -1;
    t = t.scaled(s);
    auto p = apply_op(soc_example(), ElementaryOp<Q>::rotation(0, t), exact);
    auto tr = reduce_socp(p, bad_cert(p), exact);
    CHECK(tr.alpha == 0);
    CHECK(same_system(replay(p, tr.ops, exact), tr.terminal));
    CHECK(classify(tr.terminal, std::nullopt, ctx).cls == Classification::BadlyBehaved);
  }

  // A longer block with the frontier coordinate further down.
  PrimalSystem<Q> p{ConeSpec{{Block::soc(5)}}, {qv({0, 0, 0, 0, -2})}, qv({3, 3, 0, 0, 0})};
  auto tr = reduce_socp(p, bad_cert(p), exact);
  CHECK(tr.terminal.k == ConeSpec{{Block::soc(3)}});
  CHECK(tr.alpha == 0);
  CHECK(same_system(replay(p, tr.ops, exact), tr.terminal));
}

TEST_CASE("the minor is badly behaved for every alpha") {
  Ctx ctx;
  for (Q a : {Q(-2), Q(-1), Q(0), Q(1), Q(10)}) {
    for (bool soc : {false, true}) {
      auto p = minor_system(a, soc);
      auto v = classify(p, std::nullopt, ctx);
      REQUIRE(v.cls == Classification::BadlyBehaved);
      CHECK(verify_certificate(p, *v.bad, exact).ok);
      auto tr = reduce(p, *v.bad, exact);
      CHECK(tr.alpha == a);
    }
  }
}

TEST_CASE("rotations and contractions preserve the verdict") {
  Rng rng(41);
  Ctx ctx;
  int changed = 0;
  for (int rep = 0; rep < 100; ++rep) {
    ConeSpec k = rep % 3 == 0 ? ConeSpec{{Block::soc(3)}} : ConeSpec{{Block::psd(2 + rep % 2)}};
    RandomSystem rs = rand_system(rng, k, true, 2);
    PrimalSystem<Q> p = rs.p;
    if (rep % 4 == 1) p = rep % 3 == 0 ? soc_example() : (k.dim() == 3 ? first_example() : second_example());
    auto before = classify(p, std::nullopt, ctx).cls;
    PrimalSystem<Q> q = p;
    for (int step = 0; step < 3; ++step) {
      int m = q.m();
      if (step % 2 == 0 && m > 0) {
        Vec<Q> lam = rand_vec_q(rng, m), mu = rand_vec_q(rng, m);
        int i = static_cast<int>(rng() % m);
        if (lam[i] == 0) lam[i] = 1;
        q = apply_op(q, ElementaryOp<Q>::contraction(i, lam, mu), exact);
      } else if (k.blocks[0].kind == BlockKind::PSD) {
        q = apply_op(q, ElementaryOp<Q>::rotation(0, rand_invertible_q(rng, k.blocks[0].n)), exact);
      } else {
        Mat<Q> t = Mat<Q>::identity(3);
        t(2, 2) = rng() % 2 ? 1 : -1;
        q = apply_op(q, ElementaryOp<Q>::rotation(0, t.scaled(Q(1 + rng() % 3))), exact);
      }
    }
    auto after = classify(q, std::nullopt, ctx).cls;
    if (before == Classification::Undecided || after == Classification::Undecided) continue;
    if (before != after) ++changed;
  }
  CHECK(changed == 0);
}
