#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace conicd;
using namespace conicd::testing;

namespace {

using Q = Rational;
const Tolerance exact{0, 0, 0};

Vec<Q> qv(std::initializer_list<Q> xs) { return Vec<Q>(xs); }

PrimalSystem<Q> first_example() { return {ConeSpec{{Block::psd(2)}}, {qv({0, 1, 0})}, qv({1, 0, 0})}; }

PrimalSystem<Q> second_example() {
  // Packed PSD(3): (11, 12, 13, 22, 23, 33).
  return {ConeSpec{{Block::psd(3)}}, {qv({1, 0, 0, 0, 0, 0}), qv({0, 0, 1, 1, 0, 0})}, qv({1, 0, 0, 1, 0, 0})};
}

PrimalSystem<Q> soc_example() { return {ConeSpec{{Block::soc(3)}}, {qv({0, 0, 1})}, qv({1, 1, 0})}; }

}  // namespace

TEST_CASE("slack examples") {
  CHECK(slack_of(first_example(), qv({0})) == qv({1, 0, 0}));
  CHECK(slack_of(second_example(), qv({0, 0})) == qv({1, 0, 0, 1, 0, 0}));
  PrimalSystem<Q> zero{ConeSpec{{Block::soc(3)}}, {qv({0, 0, 0})}, qv({2, 1, 0})};
  CHECK(slack_of(zero, qv({5})) == qv({2, 1, 0}));
  CHECK_THROWS_AS(slack_of(zero, qv({1, 2})), DimensionMismatch);
}

TEST_CASE("maximum slack examples") {
  Ctx ctx;
  auto a = find_max_slack(first_example(), std::nullopt, ctx);
  CHECK(a.z == qv({1, 0, 0}));
  CHECK(a.face.blocks[0].rank == 1);
  CHECK(a.status == SlackStatus::OracleCertifiedMaximal);

  auto b = find_max_slack(soc_example(), std::nullopt, ctx);
  CHECK(b.z == qv({1, 1, 0}));

  PrimalSystem<Q> slater{ConeSpec{{Block::soc(3)}}, {qv({0, 0, 0})}, qv({2, 1, 0})};
  auto c = find_max_slack(slater, std::nullopt, ctx);
  CHECK(c.z == qv({2, 1, 0}));
  CHECK(c.face.blocks[0].tag == RayTag::Full);

  auto e = find_max_slack(second_example(), std::nullopt, ctx);
  CHECK(e.face.blocks[0].rank == 2);
  CHECK(slack_of(second_example(), e.x) == e.z);

  PrimalSystem<Q> infeasible{ConeSpec{{Block::psd(2)}}, {qv({0, 0, 0})}, qv({1, 0, -1})};
  CHECK_THROWS_AS(find_max_slack(infeasible, std::nullopt, ctx), SystemInfeasible);
  CHECK_THROWS_AS(find_max_slack(first_example(), std::optional<Vec<Q>>(qv({1})), ctx), std::invalid_argument);
}

TEST_CASE("maximality verification examples") {
  Ctx ctx;
  auto v = verify_max_slack(first_example(), qv({1, 0, 0}), ctx);
  CHECK(v.result == MaxCheck::CertifiedMaximal);

  auto r = verify_max_slack(first_example(), qv({0, 0, 0}), ctx);
  CHECK(r.result == MaxCheck::Refuted);
  CHECK(r.better == qv({1, 0, 0}));

  PrimalSystem<Q> slater{ConeSpec{{Block::psd(2)}}, {qv({0, 0, 0})}, qv({1, 0, 1})};
  CHECK(verify_max_slack(slater, qv({1, 0, 1}), ctx).result == MaxCheck::CertifiedMaximal);

  // A boundary slack of a system that also has interior slacks.
  PrimalSystem<Q> p{ConeSpec{{Block::psd(2)}}, {qv({0, 0, 1})}, qv({1, 0, 0})};
  auto w = verify_max_slack(p, qv({1, 0, 0}), ctx);
  REQUIRE(w.result == MaxCheck::Refuted);
  CHECK(member(p.k, w.better, true, exact));
  CHECK(solve_in_span(p.a, sub(p.b, w.better), exact));

  auto claimed = max_slack_from_claim(first_example(), qv({1, 0, 0}), ctx);
  CHECK(claimed.status == SlackStatus::OracleCertifiedMaximal);
  CHECK(claimed.x == qv({0}));
  CHECK_THROWS(max_slack_from_claim(p, qv({1, 0, 0}), ctx));
}

TEST_CASE("form conversions") {
  auto s = to_subspace(first_example(), exact);
  CHECK(s.z0 == qv({1, 0, 0}));
  CHECK(subspace_equal(s.l, span(3, std::vector<Vec<Q>>{qv({0, 1, 0})}, exact), exact));
  auto p = to_primal(s);
  CHECK(subspace_equal(span(3, p.a, exact), s.l, exact));

  // Dual form whose maximal feasible matrix is diag(1,1,0): y33 = 0, y11 + y22 = 2.
  DualFormSystem<Q> d{ConeSpec{{Block::psd(3)}}, {qv({0, 0, 0, 0, 0, 1}), qv({1, 0, 0, 1, 0, 0})}, qv({0, 2})};
  auto dp = dual_to_primal(d, exact);
  CHECK(dp.b == qv({1, 0, 0, 1, 0, 0}));
  Ctx ctx;
  auto ms = find_max_slack(dp, std::nullopt, ctx);
  CHECK(face_equal(dp.k, ms.face, minimal_face(dp.k, qv({1, 0, 0, 1, 0, 0}), exact), exact));
  for (int i = 0; i < 2; ++i) CHECK(pair(d.k, d.a[i], ms.z) == d.c[i]);

  DualFormSystem<Q> bad{ConeSpec{{Block::orthant(2)}}, {qv({1, 1}), qv({2, 2})}, qv({1, 3})};
  CHECK_THROWS_AS(dual_to_primal(bad, exact), InconsistentObjective);
}

TEST_CASE("value translation") {
  auto p = first_example();
  auto s = to_subspace(p, exact);
  auto r = value_translation(p, s, qv({0, Q(1, 2), 0}), qv({0}), exact);
  CHECK(r.ok);
  CHECK(r.lhs == 0);

  SubspaceSystem<Q> other{p.k, qv({0, 0, 1}), s.l};
  CHECK_THROWS_AS(value_translation(p, other, qv({0, 0, 0}), qv({0}), exact), NotEquivalentForms);

  Rng rng(5);
  for (int it = 0; it < 100; ++it) {
    ConeSpec k = rand_small_cone(rng);
    auto rs = rand_system(rng, k, false);
    // An equivalent subspace form with a shifted base point.
    Vec<Q> shift = rand_vec_q(rng, rs.p.m());
    Vec<Q> z0 = slack_of(rs.p, shift);
    SubspaceSystem<Q> q{k, z0, span(k.dim(), rs.p.a, exact)};
    Vec<Q> y0 = rand_vec_q(rng, k.dim());
    auto t = value_translation(rs.p, q, y0, rs.xbar, exact);
    // With z0 = b - A shift the identity carries the constant <c, shift>.
    Q cs = 0;
    for (int i = 0; i < rs.p.m(); ++i) cs += pair(k, rs.p.a[i], y0) * shift[i];
    CHECK(t.lhs == doctest::Approx(t.rhs + cs.get_d()).epsilon(1e-10));
    auto tp = value_translation(rs.p, to_subspace(rs.p, exact), y0, rs.xbar, exact);
    CHECK(tp.ok);
    CHECK(tp.residual == 0);

    PrimalSystem<double> pd{k, {}, convert_vec<Q, double>(rs.p.b)};
    for (const auto& a : rs.p.a) pd.a.push_back(convert_vec<Q, double>(a));
    auto td = value_translation(pd, to_subspace(pd, Tolerance{}), convert_vec<Q, double>(y0),
                                convert_vec<Q, double>(rs.xbar), Tolerance{});
    CHECK(std::fabs(td.residual) <= 1e-10 * std::max(1.0, std::fabs(td.rhs)));
  }
}

TEST_CASE("maximum slack properties on random systems") {
  Rng rng(31);
  Ctx ctx;
  int runs = 0, undecided = 0;
  for (int it = 0; it < 200; ++it) {
    ConeSpec k = rand_small_cone(rng);
    if (k.dim() > 8) continue;
    auto rs = rand_system(rng, k, it % 2 == 0);
    ++runs;
    MaxSlack<Q> ms;
    try {
      ms = find_max_slack(rs.p, std::optional<Vec<Q>>(rs.xbar), ctx);
    } catch (const OracleUndecided&) {
      ++undecided;
      continue;
    }
    // Reconstruction and membership.
    CHECK(slack_of(rs.p, ms.x) == ms.z);
    CHECK(member(k, ms.z, false, exact));
    // Every encountered slack sits in the final face.
    for (const auto& z : ms.encountered) CHECK(face_contains(k, ms.face, minimal_face(k, z, exact), exact));
    CHECK(face_contains(k, ms.face, minimal_face(k, rs.z, exact), exact));
    // Independent maximality check through the outside-face oracle.
    auto v = verify_max_slack(rs.p, ms.z, ctx);
    CHECK(v.result != MaxCheck::Refuted);
    // The converted form gives the same face.
    auto back = to_primal(to_subspace(rs.p, exact));
    auto ms2 = find_max_slack(back, std::nullopt, ctx);
    CHECK(face_equal(k, ms.face, ms2.face, exact));
  }
  MESSAGE("undecided " << undecided << " of " << runs);
  CHECK(undecided == 0);
}
