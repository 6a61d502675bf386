#include "conicd/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <iomanip>
#include <sstream>

namespace conicd {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

ConeSpec cone_from_string(const std::string& s) {
  CpaFile f = parse_cpa("CPA 1\nCONE " + s + "\nFORM PRIMAL\nVARS 0\n");
  return f.k;
}

template <class T>
json to_json(const T& x) {
  if constexpr (Field<T>::exact)
    return Field<T>::str(x);
  else
    return x;
}

template <class T>
T scalar_from_json(const json& j) {
  if (j.is_string()) {
    Rational q = parse_rational(j.get<std::string>());
    if constexpr (Field<T>::exact)
      return q;
    else
      return q.get_d();
  }
  if (!j.is_number()) throw std::invalid_argument("expected a number");
  if constexpr (Field<T>::exact) {
    if (j.is_number_integer()) return Rational(j.get<long>());
    return Field<T>::from_double(j.get<double>());
  } else {
    return j.get<double>();
  }
}

template <class T>
json vec_json(const Vec<T>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(to_json(x));
  return a;
}

template <class T>
Vec<T> vec_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array");
  Vec<T> v;
  for (const auto& x : j) v.push_back(scalar_from_json<T>(x));
  return v;
}

namespace {

template <class T>
json mat_json(const Mat<T>& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(to_json(m(i, j)));
    a.push_back(r);
  }
  return a;
}

template <class T>
Mat<T> mat_from_json(const json& j) {
  int r = static_cast<int>(j.size());
  int c = r ? static_cast<int>(j.at(0).size()) : 0;
  Mat<T> m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(j.at(i).size()) != c) throw std::invalid_argument("ragged matrix");
    for (int k = 0; k < c; ++k) m(i, k) = scalar_from_json<T>(j.at(i).at(k));
  }
  return m;
}

template <class T>
json log_json(const TransformLog<T>& log) {
  json a = json::array();
  for (const auto& st : log.steps)
    a.push_back({{"kind", transform_name(st.kind)}, {"block", st.block}, {"matrix", mat_json(st.t)}, {"note", st.note}});
  return a;
}

TransformKind transform_from(const std::string& s) {
  for (auto k : {TransformKind::Congruence, TransformKind::Type1, TransformKind::Type2, TransformKind::Permutation,
                 TransformKind::SocRotation, TransformKind::Scaling})
    if (s == transform_name(k)) return k;
  throw std::invalid_argument("unknown transform kind '" + s + "'");
}

template <class T>
TransformLog<T> log_from_json(const json& j) {
  TransformLog<T> log;
  for (const auto& s : j)
    log.steps.push_back({transform_from(s.at("kind").get<std::string>()), s.at("block").get<int>(),
                         mat_from_json<T>(s.at("matrix")), s.value("note", "")});
  return log;
}

template <class T>
json maximality_json(const std::optional<FRResult<T>>& fr) {
  if (!fr) return nullptr;
  json chain = json::array();
  for (const auto& st : fr->chain) chain.push_back({{"cone", st.cone.str()}, {"u", vec_json(st.u)}});
  return {{"status", status_name(fr->status)},
          {"chain", chain},
          {"face", fr->face.reduced.str()},
          {"slack", vec_json(fr->slack)},
          {"x", vec_json(fr->x)}};
}

template <class T>
std::optional<FRResult<T>> maximality_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  FRResult<T> fr;
  std::string st = j.at("status").get<std::string>();
  fr.status = st == status_name(OracleStatus::Feasible)     ? OracleStatus::Feasible
              : st == status_name(OracleStatus::Infeasible) ? OracleStatus::Infeasible
                                                            : OracleStatus::Unknown;
  for (const auto& s : j.at("chain")) {
    FRStep<T> step;
    step.cone = cone_from_string(s.at("cone").get<std::string>());
    step.u = vec_from_json<T>(s.at("u"));
    fr.chain.push_back(step);
  }
  std::string face = j.at("face").get<std::string>();
  if (!face.empty()) fr.face.reduced = cone_from_string(face);
  fr.slack = vec_from_json<T>(j.at("slack"));
  fr.x = vec_from_json<T>(j.at("x"));
  return fr;
}

}  // namespace

template <class T>
json system_json(const PrimalSystem<T>& p) {
  json a = json::array();
  for (const auto& ai : p.a) a.push_back(vec_json(ai));
  return {{"cone", p.k.str()}, {"a", a}, {"b", vec_json(p.b)}};
}

template <class T>
json certificate_json(const Verdict<T>& v) {
  if (v.bad) {
    const BadCert<T>& c = *v.bad;
    json j = {{"kind", "bad"},
              {"case", bad_case_name(c.tag)},
              {"available", c.available},
              {"z", vec_json(c.z)},
              {"v", vec_json(c.v)},
              {"coords", vec_json(c.coords)},
              {"block", c.block},
              {"normal_form", normal_form_name(c.form)},
              {"transforms", log_json(c.log)},
              {"z_normal", vec_json(c.z_normal)},
              {"v_normal", vec_json(c.v_normal)},
              {"alpha", to_json(c.alpha)},
              {"maximality", maximality_json(c.maximality)}};
    return j;
  }
  if (v.good) {
    const GoodCert<T>& c = *v.good;
    json w = json::array();
    for (const auto& x : c.w_basis) w.push_back(vec_json(x));
    return {{"kind", "good"},
            {"z", vec_json(c.z)},
            {"u", vec_json(c.u)},
            {"tangent_basis", w},
            {"transforms", log_json(c.log)},
            {"z_normal", vec_json(c.z_normal)},
            {"u_normal", vec_json(c.u_normal)},
            {"maximality", maximality_json(c.maximality)}};
  }
  return nullptr;
}

template <class T>
json trace_json(const ReductionTrace<T>& tr) {
  json ops = json::array();
  for (size_t i = 0; i < tr.ops.size(); ++i) {
    const auto& op = tr.ops[i];
    json o = {{"op", op_name(op.kind)}, {"text", tr.described[i]}};
    switch (op.kind) {
      case OpKind::Rotation:
        o["block"] = op.block;
        o["matrix"] = mat_json(op.t);
        break;
      case OpKind::Contraction:
        o["index"] = op.index;
        o["lambda"] = vec_json(op.lambda);
        o["mu"] = vec_json(op.mu);
        break;
      case OpKind::DeleteRows:
        o["block"] = op.block;
        o["rows"] = op.rows;
        break;
      case OpKind::DeleteMatrix: o["index"] = op.index; break;
    }
    ops.push_back(o);
  }
  return {{"alpha", to_json(tr.alpha)}, {"canonical", tr.canonical}, {"ops", ops}, {"terminal", system_json(tr.terminal)}};
}

template <class T>
json report_json(const RunInfo& info, const Verdict<T>& v, const std::optional<ReductionTrace<T>>& trace,
                 const OracleStats& stats, const std::optional<T>& lambda) {
  json r;
  r["schema"] = "report_v1";
  r["instance"] = {{"digest", info.digest}, {"form", form_name(info.form)}, {"cone", info.cone}};
  r["mode"] = mode_name(info.mode);
  r["verdict"] = classification_name(v.cls);
  r["caveats"] = v.caveats;
  if (!v.reason.empty()) r["reason"] = v.reason;
  r["slack"] = {{"z", vec_json(v.slack.z)},
                {"x", vec_json(v.slack.x)},
                {"status", slack_status_name(v.slack.status)},
                {"computed", v.slack_computed}};
  r["certificate"] = certificate_json(v);
  if (lambda) r["lambda"] = to_json(*lambda);
  r["reduction"] = trace ? trace_json(*trace) : json(nullptr);
  r["stats"] = {{"solves", stats.solves.load()},
                {"feasible", stats.feasible.load()},
                {"infeasible", stats.infeasible.load()},
                {"unknown", stats.unknown.load()},
                {"newton_steps", stats.newton_steps.load()}};
  if (info.millis) r["timing_ms"] = *info.millis;
  return r;
}

template <class T>
ParsedCertificate<T> certificate_from_json(const json& report) {
  ParsedCertificate<T> out;
  const json& c = report.contains("certificate") ? report.at("certificate") : report;
  if (c.is_null()) return out;
  std::string kind = c.at("kind").get<std::string>();
  if (kind == "bad") {
    BadCert<T> b;
    b.available = c.value("available", true);
    b.tag = c.value("case", "TangentCase") == std::string("TangentCase") ? BadCase::TangentCase
                                                                          : BadCase::ComplementarityCase;
    b.z = vec_from_json<T>(c.at("z"));
    b.v = vec_from_json<T>(c.at("v"));
    b.coords = vec_from_json<T>(c.at("coords"));
    b.block = c.value("block", -1);
    std::string form = c.value("normal_form", "none");
    for (auto nf : {NormalForm::None, NormalForm::Vform, NormalForm::ScaledVform, NormalForm::SocForm,
                    NormalForm::PConeShape})
      if (form == normal_form_name(nf)) b.form = nf;
    b.log = log_from_json<T>(c.value("transforms", json::array()));
    b.z_normal = vec_from_json<T>(c.value("z_normal", json::array()));
    b.v_normal = vec_from_json<T>(c.value("v_normal", json::array()));
    if (c.contains("alpha")) b.alpha = scalar_from_json<T>(c.at("alpha"));
    b.maximality = maximality_from_json<T>(c.value("maximality", json(nullptr)));
    out.bad = b;
  } else if (kind == "good") {
    GoodCert<T> g;
    g.z = vec_from_json<T>(c.at("z"));
    g.u = vec_from_json<T>(c.at("u"));
    for (const auto& w : c.value("tangent_basis", json::array())) g.w_basis.push_back(vec_from_json<T>(w));
    g.log = log_from_json<T>(c.value("transforms", json::array()));
    g.z_normal = vec_from_json<T>(c.value("z_normal", json::array()));
    g.u_normal = vec_from_json<T>(c.value("u_normal", json::array()));
    g.maximality = maximality_from_json<T>(c.value("maximality", json(nullptr)));
    out.good = g;
  } else {
    throw std::invalid_argument("unknown certificate kind '" + kind + "'");
  }
  return out;
}

#define CONICD_INST(T)                                                                                        \
  template json to_json(const T&);                                                                            \
  template T scalar_from_json(const json&);                                                                   \
  template json vec_json(const Vec<T>&);                                                                      \
  template Vec<T> vec_from_json(const json&);                                                                 \
  template json system_json(const PrimalSystem<T>&);                                                          \
  template json certificate_json(const Verdict<T>&);                                                          \
  template json trace_json(const ReductionTrace<T>&);                                                         \
  template json report_json(const RunInfo&, const Verdict<T>&, const std::optional<ReductionTrace<T>>&,       \
                            const OracleStats&, const std::optional<T>&);                                     \
  template ParsedCertificate<T> certificate_from_json(const json&);
CONICD_INST(double)
CONICD_INST(Rational)
#undef CONICD_INST

}  // namespace conicd
