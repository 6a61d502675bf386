#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "conicd/demo.hpp"

using namespace conicd;

namespace {

enum Exit { kClean = 0, kCaveated = 1, kUndecided = 2, kInputError = 3, kVerifyFailed = 4 };

struct Options {
  std::string file, report, to = "primal", json_out, mode = "auto", fixtures = default_fixture_dir();
  double tol_rank = Tolerance{}.rank;
  std::uint64_t seed = 1;
  int threads = 1;
  bool no_search = false, timing = false;
};

std::optional<Mode> forced_mode(const Options& o) {
  if (o.mode == "exact") return Mode::Exact;
  if (o.mode == "float") return Mode::Float;
  return std::nullopt;
}

void setup(Ctx& c, const Options& o) {
  c.tol.rank = o.tol_rank;
  c.seed = o.seed;
  c.threads = o.threads;
  c.search = !o.no_search;
}

void write_json(const Options& o, const json& j) {
  if (o.json_out.empty()) return;
  if (o.json_out == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(o.json_out);
  if (!out) throw std::runtime_error("cannot write " + o.json_out);
  out << j.dump(2) << "\n";
}

template <class T>
std::string vec_text(const Vec<T>& v) {
  std::string s = "(";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (Field<T>::exact)
      s += Field<T>::str(v[i]);
    else
      s += format_value(v[i]);
  }
  return s + ")";
}

template <class T>
int analyze(const Options& o, const CpaFile& f, const std::string& text, bool reduce) {
  auto t0 = std::chrono::steady_clock::now();
  Ctx ctx;
  setup(ctx, o);
  Instance<T> in = build_instance<T>(f);
  ClassifyOptions co;
  co.search = !o.no_search;
  Verdict<T> v;
  std::optional<T> lambda;
  PrimalSystem<T> p;
  if (in.form == Form::Dual) {
    auto dv = classify_dual_form(in.dual, in.slack, ctx, co);
    v = dv.verdict;
    p = dv.primal;
    lambda = dv.lambda;
  } else {
    p = analyzed_system(in, ctx.tol);
    std::optional<MaxSlack<T>> ms;
    if (in.slack) ms = max_slack_from_claim(p, *in.slack, ctx);
    v = classify(p, ms, ctx, co);
  }
  std::optional<ReductionTrace<T>> trace;
  std::string reduce_note;
  if (reduce) {
    if (v.bad && v.bad->available && !o.no_search) {
      try {
        trace = conicd::reduce(p, *v.bad, ctx.tol);
      } catch (const std::exception& e) {
        reduce_note = e.what();
      }
    } else {
      reduce_note = v.cls == Classification::WellBehaved ? "well behaved: nothing to reduce" : "no certificate to reduce";
    }
  }
  RunInfo info{sha256_hex(text), f.form, f.k.str(), Field<T>::mode, std::nullopt};
  if (o.timing)
    info.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  json rep = report_json(info, v, trace, ctx.stats, lambda);
  if (!reduce_note.empty()) rep["reduction_note"] = reduce_note;

  std::cout << "verdict: " << classification_name(v.cls) << " (" << mode_name(Field<T>::mode) << ")\n";
  if (!v.reason.empty()) std::cout << "reason: " << v.reason << "\n";
  for (const auto& c : v.caveats) std::cout << "caveat: " << c << "\n";
  std::cout << "slack z = " << vec_text(v.slack.z) << " [" << slack_status_name(v.slack.status) << "]\n";
  if (v.bad) {
    std::cout << "case: " << bad_case_name(v.bad->tag) << "\n";
    if (v.bad->available) {
      std::cout << "direction v = " << vec_text(v.bad->v) << "\n";
      std::cout << "normal form: " << normal_form_name(v.bad->form) << "\n";
      if (!v.bad->v_normal.empty()) std::cout << "normalized v = " << vec_text(v.bad->v_normal) << "\n";
    }
  }
  if (v.good) std::cout << "u = " << vec_text(v.good->u) << "\n";
  if (lambda) std::cout << "lambda = " << vec_text(Vec<T>{*lambda}) << "\n";
  if (trace) {
    for (const auto& d : trace->described) std::cout << "op: " << d << "\n";
    std::cout << "alpha = " << vec_text(Vec<T>{trace->alpha}) << (trace->canonical ? "" : " (minor up to scaling)")
              << "\n";
  } else if (!reduce_note.empty()) {
    std::cout << "reduce: " << reduce_note << "\n";
  }
  write_json(o, rep);
  if (v.cls == Classification::Undecided) return kUndecided;
  if (reduce && !trace && v.bad) return kUndecided;
  return v.caveats.empty() ? kClean : kCaveated;
}

template <class T>
int verify(const Options& o, const CpaFile& f) {
  Ctx ctx;
  setup(ctx, o);
  Instance<T> in = build_instance<T>(f);
  PrimalSystem<T> p = analyzed_system(in, ctx.tol);
  json rep;
  try {
    rep = json::parse(read_file(o.report));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("report: ") + e.what());
  }
  ParsedCertificate<T> c = certificate_from_json<T>(rep);
  VerifyReport vr;
  if (c.bad)
    vr = verify_certificate(p, *c.bad, ctx.tol);
  else if (c.good)
    vr = verify_certificate(p, *c.good, ctx.tol);
  else
    vr.failure = "report has no certificate";
  if (vr.ok) {
    std::cout << "certificate OK (" << vr.checks << " checks)\n";
    return kClean;
  }
  std::cout << "certificate REJECTED: " << vr.failure << "\n";
  return kVerifyFailed;
}

template <class T>
int convert(const Options& o, const CpaFile& f) {
  Ctx ctx;
  setup(ctx, o);
  Instance<T> in = build_instance<T>(f);
  Instance<T> out;
  PrimalSystem<T> p = analyzed_system(in, ctx.tol);
  if (o.to == "primal") {
    out.form = Form::Primal;
    out.primal = p;
    if (in.form == Form::Primal) out.objective = in.objective;
  } else if (o.to == "subspace") {
    out.form = Form::Subspace;
    out.subspace = to_subspace(p, ctx.tol);
  } else if (o.to == "dual") {
    if (in.form == Form::Dual) {
      out = in;
    } else {
      // { y in K* : <n_j, y> = <n_j, b> } with n_j spanning the complement of R(A) under the pairing.
      ConeSpec kd = p.k.dual();
      Subspace<T> nb = pair_complement(p.k, span(p.k.dim(), p.a, ctx.tol), ctx.tol);
      out.form = Form::Dual;
      out.dual.k = kd;
      out.dual.a = nb.basis;
      for (const auto& n : nb.basis) out.dual.c.push_back(pair(p.k, n, p.b));
    }
  } else {
    throw std::invalid_argument("--to must be primal, subspace or dual");
  }
  std::cout << emit_cpa(out);
  return kClean;
}

int demo(const Options& o) {
  auto reps = run_demo(o.fixtures, o.threads, o.seed);
  bool ok = true;
  json all = json::array();
  for (const auto& r : reps) {
    std::cout << (r.ok ? "PASS " : "FAIL ") << r.name << "\n";
    for (const auto& c : r.checks)
      std::cout << "  " << (c.ok ? "ok   " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
    ok = ok && r.ok;
    json cj = json::array();
    for (const auto& c : r.checks) cj.push_back({{"check", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    all.push_back({{"fixture", r.name}, {"ok", r.ok}, {"checks", cj}, {"detail", r.detail}});
  }
  write_json(o, json{{"schema", "demo_v1"}, {"fixtures", all}});
  return ok ? kClean : kVerifyFailed;
}

template <class Fn>
int dispatch(const Options& o, Fn&& fn) {
  std::string text = read_file(o.file);
  CpaFile f = parse_cpa(text);
  Mode m = choose_mode(f, forced_mode(o));
  return m == Mode::Exact ? fn(f, text, Rational{}) : fn(f, text, 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decide whether a conic linear system is well behaved and certify the answer."};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* c) {
    c->add_option("--mode", o.mode, "exact, float or auto (exact unless the file has decimals)")
        ->check(CLI::IsMember({"auto", "exact", "float"}));
    c->add_option("--tol-rank", o.tol_rank, "relative rank tolerance in float mode");
    c->add_option("--seed", o.seed, "seed for randomized searches");
    c->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    c->add_option("--json", o.json_out, "write the JSON report here ('-' for stdout)");
  };
  auto* an = app.add_subcommand("analyze", "classify a system and print a certificate");
  an->add_option("file", o.file)->required();
  an->add_flag("--no-search", o.no_search, "verdict only, skip certificate presentation");
  an->add_flag("--timing", o.timing, "include timing in the report");
  common(an);
  auto* vf = app.add_subcommand("verify", "check the certificate in a report against a system");
  vf->add_option("file", o.file)->required();
  vf->add_option("report", o.report)->required();
  common(vf);
  auto* rd = app.add_subcommand("reduce", "analyze and reduce a badly behaved system to the excluded minor");
  rd->add_option("file", o.file)->required();
  rd->add_flag("--timing", o.timing, "include timing in the report");
  common(rd);
  auto* cv = app.add_subcommand("convert", "rewrite a system in another form");
  cv->add_option("file", o.file)->required();
  cv->add_option("--to", o.to, "primal, subspace or dual")->check(CLI::IsMember({"primal", "subspace", "dual"}));
  common(cv);
  auto* dm = app.add_subcommand("demo", "run the fixture suite");
  dm->add_option("--fixtures", o.fixtures, "fixture directory");
  common(dm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kClean : kInputError;
  }
  try {
    if (dm->parsed()) return demo(o);
    if (an->parsed() || rd->parsed()) {
      bool red = rd->parsed();
      return dispatch(o, [&](const CpaFile& f, const std::string& text, auto tag) {
        return analyze<decltype(tag)>(o, f, text, red);
      });
    }
    if (vf->parsed())
      return dispatch(o, [&](const CpaFile& f, const std::string&, auto tag) { return verify<decltype(tag)>(o, f); });
    if (cv->parsed())
      return dispatch(o, [&](const CpaFile& f, const std::string&, auto tag) { return convert<decltype(tag)>(o, f); });
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kInputError;
  } catch (const SystemInfeasible& e) {
    std::cerr << "input error: system is infeasible: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
