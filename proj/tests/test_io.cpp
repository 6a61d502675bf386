#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "conicd/demo.hpp"
#include "support.hpp"

using namespace conicd;
using namespace conicd::testing;

namespace {

using Q = Rational;

const char* kHeader = "CPA 1\nCONE PSD 2\nFORM PRIMAL\nVARS 1\n";

ParseError parse_error(const std::string& text) {
  try {
    parse_cpa(text);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("no parse error for:\n" << text);
  return ParseError(0, 0, "", "");
}

std::string fixture(const std::string& name) { return default_fixture_dir() + "/" + name; }

template <class T>
json analyze_report(const std::string& path, int threads) {
  std::string text = read_file(path);
  CpaFile f = parse_cpa(text);
  Instance<T> in = build_instance<T>(f);
  Ctx ctx;
  ctx.threads = threads;
  PrimalSystem<T> p = analyzed_system(in, ctx.tol);
  auto v = classify(p, std::nullopt, ctx);
  std::optional<ReductionTrace<T>> tr;
  if (v.bad && v.bad->available) tr = reduce(p, *v.bad, ctx.tol);
  RunInfo info{sha256_hex(text), f.form, f.k.str(), Field<T>::mode, std::nullopt};
  return report_json(info, v, tr, ctx.stats);
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(CONICD_CLI) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string temp_path(const std::string& name) { return std::string(CONICD_TEST_TMP) + "/" + name; }

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_CASE("parse errors carry line, column and token") {
  auto e = parse_error("CPA 2\n");
  CHECK(e.line == 1);
  CHECK(e.col == 5);
  CHECK(e.token == "2");

  e = parse_error(std::string("# comment\n") + kHeader + "MATRIX 1\n1 2 1 5\n");
  CHECK(e.line == 7);
  CHECK(e.token == "1");
  CHECK(std::string(e.what()).find("upper triangle") != std::string::npos);

  e = parse_error(std::string(kHeader) + "MATRIX 1\n1 1 1 x7\n");
  CHECK(e.line == 6);
  CHECK(e.col == 7);
  CHECK(e.token == "x7");

  e = parse_error(std::string(kHeader) + "MATRIX 1\n1 1 1 1\n1 1 1 2\n");
  CHECK(e.line == 7);
  CHECK(std::string(e.what()).find("duplicate entry") != std::string::npos);

  e = parse_error(std::string(kHeader) + "RHS\nRHS\n");
  CHECK(std::string(e.what()).find("duplicate section") != std::string::npos);

  e = parse_error(std::string(kHeader) + "MATRIX 2\n");
  CHECK(e.token == "2");
  e = parse_error(std::string(kHeader) + "Z0\n");
  CHECK(std::string(e.what()).find("not allowed") != std::string::npos);
  e = parse_error("CPA 1\nCONE PSD 2\nFORM DUAL\nVARS 1\nMATRIX 1\n1 1 1 1\n");
  CHECK(std::string(e.what()).find("OBJ") != std::string::npos);
  e = parse_error("CPA 1\nCONE SOC 3\nFORM PRIMAL\nVARS 1\nMATRIX 1\n1 2 2 1\n");
  CHECK(std::string(e.what()).find("column 1") != std::string::npos);
  e = parse_error("CPA 1\nCONE PCONE 3 1\n");
  CHECK(e.token == "1");
  e = parse_error("CPA 1\nCONE PSD 2\n");
  CHECK(e.line == 3);
}

TEST_CASE("mode selection") {
  auto f = parse_cpa(std::string(kHeader) + "RHS\n1 1 1 1/2\n");
  CHECK_FALSE(f.float_tokens);
  CHECK(choose_mode(f, std::nullopt) == Mode::Exact);
  CHECK(choose_mode(f, Mode::Float) == Mode::Float);
  auto g = parse_cpa(std::string(kHeader) + "RHS\n1 1 1 0.25\n");
  CHECK(g.float_tokens);
  CHECK(choose_mode(g, std::nullopt) == Mode::Float);
  // Forced exact mode reads decimals as exact decimal fractions.
  auto in = build_instance<Q>(g);
  CHECK(in.primal.b[0] == Q(1, 4));
  auto e = build_instance<Q>(parse_cpa(std::string(kHeader) + "RHS\n1 1 1 1e-2\n"));
  CHECK(e.primal.b[0] == Q(1, 100));
}

TEST_CASE("fixtures round trip through the canonical writer") {
  for (const auto& fx : builtin_fixtures()) {
    CAPTURE(fx.file);
    auto in = build_instance<Q>(parse_cpa(read_file(fixture(fx.file))));
    std::string once = emit_cpa(in);
    auto again = build_instance<Q>(parse_cpa(once));
    CHECK(emit_cpa(again) == once);
    CHECK(again.primal.b == in.primal.b);
    CHECK(again.primal.a == in.primal.a);
    CHECK(again.objective == in.objective);
  }
  // Other forms and floats.
  std::string sub = "CPA 1\nCONE SOC 3\nFORM SUBSPACE\nVARS 1\nZ0\n1 1 1 1\n1 2 1 1\nLBASIS 1\n1 3 1 1\n";
  auto s = build_instance<Q>(parse_cpa(sub));
  CHECK(emit_cpa(build_instance<Q>(parse_cpa(emit_cpa(s)))) == emit_cpa(s));
  std::string fl = std::string(kHeader) + "MATRIX 1\n1 1 2 0.1\nRHS\n1 1 1 3\n";
  auto d = build_instance<double>(parse_cpa(fl));
  auto d2 = build_instance<double>(parse_cpa(emit_cpa(d)));
  CHECK(d2.primal.a == d.primal.a);
  CHECK(d2.primal.b == d.primal.b);
}

TEST_CASE("format_value keeps floats recognizable and exact") {
  CHECK(format_value(1.0) == "1.0");
  CHECK(format_value(-3.0) == "-3.0");
  CHECK(std::stod(format_value(0.1)) == 0.1);
  CHECK(std::stod(format_value(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_value(1e300).find_first_of(".e") != std::string::npos);
}

TEST_CASE("reports re-verify and are deterministic") {
  for (const auto& fx : builtin_fixtures()) {
    CAPTURE(fx.file);
    std::string path = fixture(fx.file);
    json r1 = analyze_report<Q>(path, 1);
    json r4 = analyze_report<Q>(path, 4);
    CHECK(r1.dump() == r4.dump());
    CHECK(r1.dump() == analyze_report<Q>(path, 1).dump());
    CHECK(r1["schema"] == "report_v1");
    CHECK(r1["instance"]["digest"] == sha256_hex(read_file(path)));
    CHECK_FALSE(r1.contains("timing_ms"));

    // Serialize, read back, verify.
    json back = json::parse(r1.dump(2));
    auto c = certificate_from_json<Q>(back);
    auto p = analyzed_system(build_instance<Q>(parse_cpa(read_file(path))), Tolerance{0, 0, 0});
    VerifyReport vr;
    if (c.bad) vr = verify_certificate(p, *c.bad, Tolerance{0, 0, 0});
    if (c.good) vr = verify_certificate(p, *c.good, Tolerance{0, 0, 0});
    CHECK((c.bad || c.good));
    CHECK_MESSAGE(vr.ok, vr.failure);
  }
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("scalar json round trip") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    Q q = rand_rat(rng, -50, 50, 37);
    CHECK(scalar_from_json<Q>(json::parse(to_json(q).dump())) == q);
    double d = rand_unit(rng) * std::pow(10.0, double(i % 40) - 20);
    CHECK(scalar_from_json<double>(json::parse(to_json(d).dump())) == d);
  }
  CHECK(to_json(Q(-3, 4)) == "-3/4");
  CHECK(cone_from_string(ConeSpec{{Block::psd(3), Block::soc(4), Block::orthant(2)}}.str()).str() ==
        ConeSpec{{Block::psd(3), Block::soc(4), Block::orthant(2)}}.str());
}

TEST_CASE("demo fixtures") {
  auto reps = run_demo(default_fixture_dir(), 3, 1);
  CHECK(reps.size() == builtin_fixtures().size());
  for (const auto& r : reps) {
    CAPTURE(r.name);
    for (const auto& c : r.checks) CHECK_MESSAGE(c.ok, c.name << ": " << c.detail);
    CHECK(r.ok);
  }
}

TEST_CASE("command-line exit codes") {
  CHECK(run_cli("analyze " + fixture("example1.cpa")) == 0);
  CHECK(run_cli("analyze " + fixture("wellbehaved3.cpa")) == 0);
  CHECK(run_cli("reduce " + fixture("example2.cpa")) == 0);
  CHECK(run_cli("analyze /nonexistent.cpa") == 3);
  CHECK(run_cli("analyze --mode sideways " + fixture("example1.cpa")) == 3);

  std::string bad = temp_path("bad_syntax.cpa");
  write(bad, "CPA 1\nCONE PSD 2\nFORM PRIMAL\nVARS x\n");
  CHECK(run_cli("analyze " + bad) == 3);

  std::string infeasible = temp_path("infeasible.cpa");
  write(infeasible, "CPA 1\nCONE PSD 2\nFORM PRIMAL\nVARS 1\nRHS\n1 1 1 1\n1 2 2 -1\n");
  CHECK(run_cli("analyze " + infeasible) == 3);

  std::string rep = temp_path("ex1.json");
  REQUIRE(run_cli("analyze " + fixture("example1.cpa") + " --json " + rep) == 0);
  CHECK(run_cli("verify " + fixture("example1.cpa") + " " + rep) == 0);
  // The same certificate does not fit another system.
  CHECK(run_cli("verify " + fixture("wellbehaved3.cpa") + " " + rep) == 4);

  json j = json::parse(read_file(rep));
  for (auto& x : j["certificate"]["v"]) x = "0";
  for (auto& x : j["certificate"]["coords"]) x = "0";
  std::string tampered = temp_path("ex1_tampered.json");
  write(tampered, j.dump());
  CHECK(run_cli("verify " + fixture("example1.cpa") + " " + tampered) == 4);

  CHECK(run_cli("convert --to dual " + fixture("example1.cpa")) == 0);
}
