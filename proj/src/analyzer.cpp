#include "conicd/analyzer.hpp"

#include <algorithm>
#include <cmath>

namespace conicd {

const char* classification_name(Classification c) {
  switch (c) {
    case Classification::WellBehaved: return "WellBehaved";
    case Classification::BadlyBehaved: return "BadlyBehaved";
    case Classification::Undecided: return "Undecided";
  }
  return "?";
}

const char* bad_case_name(BadCase c) { return c == BadCase::TangentCase ? "TangentCase" : "ComplementarityCase"; }

const char* transform_name(TransformKind k) {
  switch (k) {
    case TransformKind::Congruence: return "congruence";
    case TransformKind::Type1: return "type1";
    case TransformKind::Type2: return "type2";
    case TransformKind::Permutation: return "permutation";
    case TransformKind::SocRotation: return "soc-rotation";
    case TransformKind::Scaling: return "scaling";
  }
  return "?";
}

const char* normal_form_name(NormalForm n) {
  switch (n) {
    case NormalForm::None: return "none";
    case NormalForm::Vform: return "vform";
    case NormalForm::ScaledVform: return "scaled-vform";
    case NormalForm::SocForm: return "soc-form";
    case NormalForm::PConeShape: return "pcone-shape";
  }
  return "?";
}

namespace {

template <class T>
Tolerance check_tol(const Tolerance& tol) {
  return Field<T>::exact ? Tolerance{0, 0, 0} : tol;
}

// Zero test for derived quantities: exact, or relative to a scale in float mode.
template <class T>
bool near0(const T& x, double scale, const Tolerance& tol) {
  if constexpr (Field<T>::exact)
    return sgn(x) == 0;
  else
    return std::fabs(x) <= 1e3 * tol.rank * std::max(1.0, scale);
}

template <class T>
std::vector<Vec<T>> generators(const PrimalSystem<T>& p) {
  std::vector<Vec<T>> g = p.a;
  g.push_back(p.b);
  return g;
}

template <class T>
Vec<T> combine(const std::vector<Vec<T>>& g, const Vec<T>& c, int d) {
  Vec<T> v(d, T(0));
  for (size_t j = 0; j < g.size(); ++j)
    if (!Field<T>::is_zero(c[j], 0.0)) v = axpy(v, c[j], g[j]);
  return v;
}

template <class T>
Vec<T> unit_vec(int n, int i) {
  Vec<T> v(n, T(0));
  v[i] = T(1);
  return v;
}

template <class T>
Mat<T> blockdiag(const Mat<T>& a, const Mat<T>& b) {
  Mat<T> m(a.rows() + b.rows(), a.cols() + b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) m(a.rows() + i, a.cols() + j) = b(i, j);
  return m;
}

template <class T>
Mat<T> swap_matrix(int n, int i, int j) {
  Mat<T> p = Mat<T>::identity(n);
  p(i, i) = T(0);
  p(j, j) = T(0);
  p(i, j) = T(1);
  p(j, i) = T(1);
  return p;
}

// Householder reflection sending the unit vector x to e1 (identity if x = e1).
template <class T>
Mat<T> householder_to_e1(const Vec<T>& x, const Tolerance& tol) {
  int n = static_cast<int>(x.size());
  Vec<T> u = x;
  u[0] -= T(1);
  T uu = dot(u, u);
  Mat<T> h = Mat<T>::identity(n);
  if (near0(uu, 1.0, tol)) return h;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) -= T(2) * u[i] * u[j] / uu;
  return h;
}

template <class T>
std::optional<T> root(const T& x) {
  return Field<T>::sqrt(x);
}

template <class T>
Vec<T> normalize_max(const Vec<T>& v) {
  double mx = max_abs(v);
  if (mx == 0) return v;
  if constexpr (Field<T>::exact) {
    Rational m = 0;
    for (const auto& e : v) m = std::max(m, Rational(::abs(e)));
    return scale(v, Rational(1 / m));
  } else {
    return scale(v, 1 / mx);
  }
}

template <class T>
struct ChildCtx {
  Ctx c;
  explicit ChildCtx(const Ctx& p) {
    c.tol = p.tol;
    c.seed = p.seed;
    c.threads = p.threads;
    c.search = p.search;
    c.budget = p.budget;
  }
  void merge_into(const Ctx& p) const {
    p.caveats.merge(c.caveats);
    p.stats.solves += c.stats.solves.load();
    p.stats.feasible += c.stats.feasible.load();
    p.stats.infeasible += c.stats.infeasible.load();
    p.stats.unknown += c.stats.unknown.load();
    p.stats.newton_steps += c.stats.newton_steps.load();
  }
};

// Coefficients (over the generators) of span{a_i, b} intersected with tan(z, K).
template <class T>
Subspace<T> tangent_coefficients(const ConeSpec& k, const FaceDescriptor<T>& f, const std::vector<Vec<T>>& g,
                                 const Tolerance& tol) {
  auto rows = tangent_equations(k, f);
  int m = static_cast<int>(g.size());
  Mat<T> rg(static_cast<int>(rows.size()), m);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < m; ++j) rg(int(i), j) = dot(rows[i], g[j]);
  return nullspace(rg, tol);
}

}  // namespace

template <class T>
SdpNormalization<T> normalize_sdp(const PrimalSystem<T>& p, const Vec<T>& z, const Tolerance& tol) {
  if (p.k.blocks.size() != 1 || p.k.blocks[0].kind != BlockKind::PSD)
    throw Unsupported("normalize_sdp needs a single PSD block");
  int n = p.k.blocks[0].n;
  Sym<T> zs = psd_block(p.k, z, 0);
  Congruence<T> c = diagonalize(zs, tol);
  double sc = max_abs(c.d);
  std::vector<int> order;
  for (int i = 0; i < n; ++i)
    if (!near0(c.d[i], sc, tol)) order.push_back(i);
  int r = static_cast<int>(order.size());
  for (int i = 0; i < n; ++i)
    if (near0(c.d[i], sc, tol)) order.push_back(i);
  Mat<T> t = c.t.select_cols(order);
  SdpNormalization<T> out;
  out.unit = true;
  for (int i = 0; i < r; ++i) {
    T di = c.d[order[i]];
    auto s = root(di);
    if (!s) out.unit = false;
  }
  for (int i = 0; i < r; ++i) {
    T di = c.d[order[i]];
    if (out.unit) {
      T s = *root(di);
      for (int row = 0; row < n; ++row) t(row, i) = t(row, i) / s;
      out.d.push_back(T(1));
    } else {
      out.d.push_back(di);
    }
  }
  out.t = t;
  out.log.steps.push_back({TransformKind::Congruence, 0, t, "slack to block-diagonal form"});
  out.system.k = p.k;
  for (const auto& a : p.a) out.system.a.push_back(psd_block(p.k, a, 0).congruence(t).packed());
  out.system.b = psd_block(p.k, p.b, 0).congruence(t).packed();
  return out;
}

template <class T>
SocNormalization<T> socp_normalize(const PrimalSystem<T>& p, const Vec<T>& z, const Tolerance& tol) {
  if (!p.k.all_of(BlockKind::SOC)) throw Unsupported("socp_normalize needs second order cone blocks");
  SocNormalization<T> out;
  Tolerance ct = check_tol<T>(tol);
  std::vector<Mat<T>> ts;
  for (size_t b = 0; b < p.k.blocks.size(); ++b) {
    int m = p.k.blocks[b].n;
    Vec<T> zb = vec_block(p.k, z, int(b));
    ConeSpec one{{p.k.blocks[b]}};
    Mat<T> t = Mat<T>::identity(m);
    bool done = true;
    char kind;
    if (is_zero_vec(zb, Field<T>::exact ? 0.0 : tol.feas)) {
      kind = 'O';
    } else if (member(one, zb, true, ct)) {
      kind = 'I';
      T s2 = zb[0] * zb[0];
      for (int i = 1; i < m; ++i) s2 -= zb[i] * zb[i];
      auto s = root(s2);
      if (s) {
        // Inverse boost of w = z / s, then scale: T z = e1.
        Vec<T> w = scale(zb, T(T(1) / *s));
        t(0, 0) = w[0];
        for (int i = 1; i < m; ++i) {
          t(0, i) = -w[i];
          t(i, 0) = -w[i];
          for (int j = 1; j < m; ++j) t(i, j) = (i == j ? T(1) : T(0)) + w[i] * w[j] / (T(1) + w[0]);
        }
        t = t.scaled(T(T(1) / *s));
      } else {
        done = false;
      }
    } else {
      kind = 'R';
      T z1 = zb[0];
      Vec<T> tail(zb.begin() + 1, zb.end());
      Mat<T> h = householder_to_e1(scale(tail, T(T(1) / z1)), tol);
      t = blockdiag(Mat<T>::identity(1), h).scaled(T(T(1) / z1));
    }
    out.kinds.push_back(kind);
    out.normalized.push_back(done);
    if (kind != 'O' && done && !(t == Mat<T>::identity(m)))
      out.log.steps.push_back({TransformKind::SocRotation, int(b), t, std::string("block ") + kind});
    ts.push_back(t);
  }
  auto apply = [&](const Vec<T>& x) {
    Vec<T> y = x;
    for (size_t b = 0; b < ts.size(); ++b) set_block(p.k, y, int(b), ts[b] * vec_block(p.k, x, int(b)));
    return y;
  };
  out.system.k = p.k;
  for (const auto& a : p.a) out.system.a.push_back(apply(a));
  out.system.b = apply(p.b);
  return out;
}

namespace {

template <class T>
void present_sdp(const PrimalSystem<T>& p, BadCert<T>& cert, const Tolerance& tol) {
  int n = p.k.blocks[0].n;
  SdpNormalization<T> nz = normalize_sdp(p, cert.z, tol);
  int r = static_cast<int>(nz.d.size());
  int q = n - r;
  Mat<T> t = nz.t;
  cert.log = nz.log;
  Sym<T> v1 = psd_block(p.k, cert.v, 0).congruence(t);
  std::vector<int> lower;
  for (int i = r; i < n; ++i) lower.push_back(i);
  Sym<T> v22 = v1.principal(lower);
  Congruence<T> c = diagonalize(v22, tol);
  double sc = std::max(1.0, max_abs(v1.packed()));
  std::vector<int> order;
  for (int i = 0; i < q; ++i)
    if (near0(c.d[i], sc, tol)) order.push_back(i);
  int kz = static_cast<int>(order.size());
  for (int i = 0; i < q; ++i)
    if (!near0(c.d[i], sc, tol)) order.push_back(i);
  Mat<T> t1 = blockdiag(Mat<T>::identity(r), c.t.select_cols(order));
  t = t * t1;
  cert.log.steps.push_back({TransformKind::Type1, 0, t1, "diagonalize the lower-right block of v"});
  Sym<T> v2 = psd_block(p.k, cert.v, 0).congruence(t);
  // Lowest zero direction of V22 with a nonzero V12 column.
  int col = -1;
  for (int j = 0; j < kz && col < 0; ++j) {
    bool nz12 = false;
    for (int i = 0; i < r; ++i) nz12 = nz12 || !near0(v2(i, r + j), sc, tol);
    if (nz12) col = j;
  }
  if (col < 0) {
    cert.form = NormalForm::None;
    return;
  }
  if (col != 0) {
    Mat<T> pm = swap_matrix<T>(n, r, r + col);
    t = t * pm;
    cert.log.steps.push_back({TransformKind::Permutation, 0, pm, "move the frontier column next to the slack block"});
  }
  Sym<T> v3 = psd_block(p.k, cert.v, 0).congruence(t);
  Vec<T> c12(r);
  for (int i = 0; i < r; ++i) c12[i] = v3(i, r);
  std::optional<T> len = nz.unit ? root(dot(c12, c12)) : std::nullopt;
  if (len) {
    Mat<T> s = Mat<T>::identity(n);
    s(r, r) = T(T(1) / *len);
    if (!(s == Mat<T>::identity(n))) {
      t = t * s;
      cert.log.steps.push_back({TransformKind::Type1, 0, s, "unit frontier column"});
    }
    Mat<T> h = householder_to_e1(scale(c12, T(T(1) / *len)), tol);
    if (!(h == Mat<T>::identity(r))) {
      Mat<T> t2 = blockdiag(h, Mat<T>::identity(q));
      t = t * t2;
      cert.log.steps.push_back({TransformKind::Type2, 0, t2, "rotate the frontier column to e1"});
    }
    cert.form = NormalForm::Vform;
  } else {
    cert.form = NormalForm::ScaledVform;
  }
  cert.z_normal = psd_block(p.k, cert.z, 0).congruence(t).packed();
  Sym<T> vn = psd_block(p.k, cert.v, 0).congruence(t);
  cert.v_normal = vn.packed();
  // Minor parameter from the lowest row meeting the frontier column: V_ii / Z_ii.
  Sym<T> zn = psd_block(p.k, cert.z, 0).congruence(t);
  for (int i = 0; i < r; ++i)
    if (!near0(vn(i, r), sc, tol)) {
      cert.alpha = vn(i, i) / zn(i, i);
      break;
    }
}

template <class T>
void present_soc(const PrimalSystem<T>& p, BadCert<T>& cert, const Tolerance& tol) {
  SocNormalization<T> sn = socp_normalize(p, cert.z, tol);
  int j = cert.block;
  if (j < 0 || sn.kinds[j] != 'R') {
    cert.form = NormalForm::None;
    return;
  }
  cert.log = sn.log;
  auto apply_all = [&](Vec<T> x) {
    for (const auto& st : cert.log.steps)
      if (st.kind == TransformKind::SocRotation) set_block(p.k, x, st.block, st.t * vec_block(p.k, x, st.block));
    return x;
  };
  Vec<T> zn = apply_all(cert.z), vn = apply_all(cert.v);
  Vec<T> vj = vec_block(p.k, vn, j);
  int m = p.k.blocks[j].n;
  double sc = std::max(1.0, max_abs(vj));
  int kidx = -1;
  for (int i = 2; i < m && kidx < 0; ++i)
    if (!near0(vj[i], sc, tol)) kidx = i;
  if (kidx < 0) {
    cert.form = NormalForm::None;
    return;
  }
  if (kidx != 2) {
    Mat<T> pm = swap_matrix<T>(m, 2, kidx);
    cert.log.steps.push_back({TransformKind::SocRotation, j, pm, "permute the tail"});
    set_block(p.k, zn, j, pm * vec_block(p.k, zn, j));
    set_block(p.k, vn, j, pm * vec_block(p.k, vn, j));
  }
  vj = vec_block(p.k, vn, j);
  if (Field<T>::sign(vj[2], 0.0) < 0) {
    Mat<T> fl = Mat<T>::identity(m);
    fl(2, 2) = T(-1);
    cert.log.steps.push_back({TransformKind::SocRotation, j, fl, "reflect the third coordinate"});
    set_block(p.k, zn, j, fl * vec_block(p.k, zn, j));
    set_block(p.k, vn, j, fl * vec_block(p.k, vn, j));
    vj = vec_block(p.k, vn, j);
  }
  T s = T(1) / vj[2];
  Mat<T> sm(1, 1);
  sm(0, 0) = s;
  cert.log.steps.push_back({TransformKind::Scaling, -1, sm, "scale v"});
  vn = scale(vn, s);
  cert.z_normal = zn;
  cert.v_normal = vn;
  cert.alpha = vec_block(p.k, vn, j)[0];
  cert.form = NormalForm::SocForm;
}

bool ray_cones(const ConeSpec& k) {
  for (const auto& b : k.blocks)
    if (b.kind != BlockKind::SOC && b.kind != BlockKind::PCone) return false;
  return !k.blocks.empty();
}

}  // namespace

template <class T>
void present_bad_certificate(const PrimalSystem<T>& p, BadCert<T>& cert, const Ctx& ctx) {
  cert.log.steps.clear();
  cert.z_normal.clear();
  cert.v_normal.clear();
  cert.form = NormalForm::None;
  if (!cert.available) return;
  if (p.k.blocks.size() == 1 && p.k.blocks[0].kind == BlockKind::PSD)
    present_sdp(p, cert, ctx.tol);
  else if (p.k.all_of(BlockKind::SOC))
    present_soc(p, cert, ctx.tol);
  else if (ray_cones(p.k))
    cert.form = NormalForm::PConeShape;
}

namespace {

template <class T>
void present_good(const PrimalSystem<T>& p, GoodCert<T>& g, const Tolerance& tol) {
  if (!(p.k.blocks.size() == 1 && p.k.blocks[0].kind == BlockKind::PSD)) return;
  int n = p.k.blocks[0].n;
  SdpNormalization<T> nz = normalize_sdp(p, g.z, tol);
  int r = static_cast<int>(nz.d.size()), q = n - r;
  Mat<T> t = nz.t;
  g.log = nz.log;
  auto tinv = inverse(t, check_tol<T>(tol));
  if (!tinv) return;
  // Dual side transforms by T^{-1} U T^{-T}.
  Sym<T> u1 = psd_block(p.k, g.u, 0).congruence(tinv->transpose());
  if (q > 0) {
    std::vector<int> lower;
    for (int i = r; i < n; ++i) lower.push_back(i);
    Congruence<T> c = diagonalize(u1.principal(lower), tol);
    // Primal block P = S^{-T} D^{1/2}, so that P^{-1} U22 P^{-T} = I when the roots exist.
    auto sinv = inverse(c.t, check_tol<T>(tol));
    if (!sinv) return;
    Mat<T> pm = sinv->transpose();
    bool unit = true;
    for (const auto& e : c.d) unit = unit && root(e).has_value() && Field<T>::sign(e, 0.0) > 0;
    if (unit)
      for (int j = 0; j < q; ++j) {
        T s = *root(c.d[j]);
        for (int i = 0; i < q; ++i) pm(i, j) = pm(i, j) * s;
      }
    Mat<T> t1 = blockdiag(Mat<T>::identity(r), pm);
    if (!(t1 == Mat<T>::identity(n))) {
      t = t * t1;
      g.log.steps.push_back({TransformKind::Type1, 0, t1, "diagonalize the complementary block"});
    }
    tinv = inverse(t, check_tol<T>(tol));
    if (!tinv) return;
  }
  g.z_normal = psd_block(p.k, g.z, 0).congruence(t).packed();
  g.u_normal = psd_block(p.k, g.u, 0).congruence(tinv->transpose()).packed();
}

}  // namespace

template <class T>
Verdict<T> classify(const PrimalSystem<T>& p, const std::optional<std::type_identity_t<MaxSlack<T>>>& slack, const Ctx& ctx,
                    const ClassifyOptions& opt) {
  validate(p);
  ChildCtx<T> child(ctx);
  const Ctx& c = child.c;
  const Tolerance& tol = c.tol;
  Tolerance ct = check_tol<T>(tol);
  Verdict<T> vd;
  auto finish = [&]() {
    if (vd.cls != Classification::Undecided && vd.slack.status != SlackStatus::OracleCertifiedMaximal)
      c.caveats.add(caveat::kConditional);
    vd.caveats = c.caveats.list();
    child.merge_into(ctx);
    return vd;
  };

  if (slack) {
    vd.slack = *slack;
  } else {
    try {
      vd.slack = find_max_slack(p, std::nullopt, c);
      vd.slack_computed = true;
    } catch (const OracleUndecided& e) {
      vd.reason = e.what();
      return finish();
    }
  }
  const Vec<T>& z = vd.slack.z;
  FaceDescriptor<T> f = minimal_face(p.k, z, tol, &c.caveats);
  std::vector<Vec<T>> g = generators(p);
  const int d = p.k.dim(), m1 = static_cast<int>(g.size());
  std::optional<FRResult<T>> maxcert;
  if (vd.slack.status == SlackStatus::OracleCertifiedMaximal && !vd.slack.fr.chain.empty()) maxcert = vd.slack.fr;
  if (vd.slack.status == SlackStatus::OracleCertifiedMaximal && vd.slack.fr.status == OracleStatus::Feasible)
    maxcert = vd.slack.fr;

  // Tangent check: span{a_i, b} and tan(z, K) must meet inside ldir(z, K).
  Subspace<T> wc = tangent_coefficients(p.k, f, g, tol);
  std::vector<Vec<T>> wbasis;
  for (const auto& cv : wc.basis) wbasis.push_back(combine(g, cv, d));
  std::optional<std::pair<Vec<T>, Vec<T>>> viol;
  for (int j = 0; j < m1 && !viol; ++j) {
    Vec<T> e = unit_vec<T>(m1, j);
    if (contains(wc, e, tol) && !in_dirset(p.k, f, g[j], DirSet::LDir, tol, &c.caveats)) viol = {g[j], e};
  }
  for (size_t i = 0; i < wbasis.size() && !viol; ++i)
    if (!in_dirset(p.k, f, wbasis[i], DirSet::LDir, tol, &c.caveats)) viol = {wbasis[i], wc.basis[i]};
  if (viol) {
    BadCert<T> bc;
    bc.z = z;
    bc.v = viol->first;
    bc.coords = viol->second;
    bc.tag = BadCase::TangentCase;
    bc.block = frontier_block(p.k, f, bc.v, tol, &c.caveats);
    bc.maximality = maxcert;
    vd.cls = Classification::BadlyBehaved;
    vd.bad = bc;
  }

  // Complementarity check: u in N((A,b)*) and ri of the conjugate face.
  ConeSpec kd = p.k.dual();
  FaceDescriptor<T> fd = conjugate_face(p.k, f, tol, &c.caveats);
  FaceEmbedding<T> emb = embed_face(kd, fd);
  const ConeSpec& cr = emb.reduced;
  int rc = cr.dim();
  std::optional<Vec<T>> u;
  std::optional<Vec<T>> frontier_coef;
  if (rc == 0) {
    u = Vec<T>(d, T(0));
  } else {
    Mat<T> mm(m1, rc);
    for (int j = 0; j < m1; ++j)
      for (int col = 0; col < rc; ++col) mm(j, col) = pair(p.k, g[j], emb.map.col(col));
    Subspace<T> sp = nullspace(mm, tol);
    OracleResult<T> o = strict_feasibility_in_face(cr, sp, c);
    if (o.status == OracleStatus::Unknown) {
      if (!vd.bad) {
        vd.cls = Classification::Undecided;
        vd.reason = "complementarity oracle undecided";
        return finish();
      }
    } else if (o.status == OracleStatus::Feasible) {
      u = normalize_max(Vec<T>(emb.map * o.witness));
    } else {
      // D_red psi = M^T c gives the frontier direction v = G c.
      Vec<int> w = pairing_weights(cr);
      Vec<T> rhs = o.witness;
      for (int i = 0; i < rc; ++i) rhs[i] = rhs[i] * T(w[i]);
      auto cc = solve_linear(mm.transpose(), rhs, tol);
      if (cc) frontier_coef = *cc;
      else frontier_coef = Vec<T>();
    }
  }

  if (!vd.bad && frontier_coef) {
    BadCert<T> bc;
    bc.z = z;
    bc.tag = BadCase::ComplementarityCase;
    bc.maximality = maxcert;
    bool ok = false;
    if (!frontier_coef->empty()) {
      bc.v = combine(g, *frontier_coef, d);
      bc.coords = *frontier_coef;
      ok = frontier_member(p.k, f, bc.v, tol, &c.caveats);
    }
    if (!ok && opt.search) {
      auto bv = brute_frontier_search(g, p.k, f, 20000, c.seed, tol);
      if (bv) {
        auto co = solve_in_span(g, *bv, tol);
        if (co) {
          bc.v = *bv;
          bc.coords = *co;
          ok = true;
        }
      }
    }
    bc.available = ok;
    if (ok) {
      // Positive rescaling keeps the frontier property.
      double mx = max_abs(bc.v);
      if (mx > 0) {
        T s;
        if constexpr (Field<T>::exact) {
          Rational mq = 0;
          for (const auto& e : bc.v) mq = std::max(mq, Rational(::abs(e)));
          s = 1 / mq;
        } else {
          s = 1 / mx;
        }
        bc.v = scale(bc.v, s);
        bc.coords = scale(bc.coords, s);
      }
      bc.block = frontier_block(p.k, f, bc.v, tol, &c.caveats);
    } else {
      vd.reason = "frontier certificate search failed";
    }
    vd.cls = Classification::BadlyBehaved;
    vd.bad = bc;
  }

  if (vd.bad) {
    if (opt.search) present_bad_certificate(p, *vd.bad, c);
    if (opt.self_verify && vd.bad->available) {
      VerifyReport rep = verify_certificate(p, *vd.bad, tol);
      if (!rep.ok) {
        vd.cls = Classification::Undecided;
        vd.reason = "certificate failed self-verification: " + rep.failure;
      }
    }
    return finish();
  }

  GoodCert<T> gc;
  gc.z = z;
  gc.u = *u;
  gc.w_basis = wbasis;
  gc.maximality = maxcert;
  if (opt.search) present_good(p, gc, tol);
  vd.cls = Classification::WellBehaved;
  vd.good = gc;
  if (opt.self_verify) {
    VerifyReport rep = verify_certificate(p, gc, tol);
    if (!rep.ok) {
      vd.cls = Classification::Undecided;
      vd.reason = "certificate failed self-verification: " + rep.failure;
    }
  }
  (void)ct;
  return finish();
}

namespace {

struct Fail {
  std::string what;
};

// `what` names the failure.
template <class T>
void need(bool cond, const std::string& what, VerifyReport& rep) {
  if (!cond) throw Fail{what};
  ++rep.checks;
}

template <class T>
bool eq0(const T& x, double scale, const Tolerance& t) {
  if constexpr (Field<T>::exact)
    return sgn(x) == 0;
  else
    return std::fabs(x) <= std::max(t.feas, 1e-9) * std::max(1.0, scale);
}

template <class T>
bool vec_eq(const Vec<T>& a, const Vec<T>& b, const Tolerance& t) {
  if (a.size() != b.size()) return false;
  double sc = std::max(max_abs(a), max_abs(b));
  for (size_t i = 0; i < a.size(); ++i)
    if (!eq0(T(a[i] - b[i]), sc, t)) return false;
  return true;
}

template <class T>
void check_slack(const PrimalSystem<T>& p, const Vec<T>& z, const std::optional<FRResult<T>>& mc, const Tolerance& t,
                 VerifyReport& rep) {
  need<T>(static_cast<int>(z.size()) == p.k.dim(), "slack has the wrong dimension", rep);
  need<T>(member(p.k, z, false, t), "slack not in cone", rep);
  need<T>(solve_in_span(p.a, sub(p.b, z), t).has_value(), "slack not of the form b - Ax", rep);
  if (mc) {
    // Replay the chain with z as the claimed relative interior point of the final face.
    FRResult<T> fr = *mc;
    fr.status = OracleStatus::Feasible;
    fr.slack = z;
    std::string why;
    need<T>(verify_fr_chain(p.k, p.a, p.b, fr, t, &why), "slack maximality chain rejected" + (why.empty() ? "" : ": " + why),
            rep);
  }
}

template <class T>
bool is_block_diag_identity_top(const Mat<T>& m, int r, const Tolerance& t) {
  int n = m.rows();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bool top = i < r || j < r;
      if (!top) continue;
      T want = (i == j && i < r) ? T(1) : T(0);
      if (!eq0(T(m(i, j) - want), 1.0, t)) return false;
    }
  return true;
}

template <class T>
bool is_block_diag_identity_bottom(const Mat<T>& m, int r, const Tolerance& t) {
  int n = m.rows();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bool bottom = i >= r || j >= r;
      if (!bottom) continue;
      T want = (i == j && i >= r) ? T(1) : T(0);
      if (!eq0(T(m(i, j) - want), 1.0, t)) return false;
    }
  return true;
}

template <class T>
bool orthogonal(const Mat<T>& q, const Tolerance& t) {
  Mat<T> g = q.transpose() * q;
  return is_block_diag_identity_top(g, g.rows(), t);
}

// T symmetric, T^T J T = lambda J with lambda > 0, T(0,0) > 0.
template <class T>
bool soc_automorphism(const Mat<T>& m, const Tolerance& t) {
  int n = m.rows();
  if (m.cols() != n || n == 0) return false;
  double sc = std::max(1.0, max_abs(m));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!eq0(T(m(i, j) - m(j, i)), sc, t)) return false;
  if (Field<T>::sign(m(0, 0), 0.0) <= 0) return false;
  Mat<T> jm = Mat<T>::identity(n);
  for (int i = 1; i < n; ++i) jm(i, i) = T(-1);
  Mat<T> g = m.transpose() * jm * m;
  T lam = g(0, 0);
  if (Field<T>::sign(lam, 0.0) <= 0) return false;
  double gs = std::max(1.0, max_abs(g));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!eq0(T(g(i, j) - lam * jm(i, j)), gs, t)) return false;
  return true;
}

template <class T>
void check_sdp_form(const PrimalSystem<T>& p, const BadCert<T>& c, const Tolerance& t, VerifyReport& rep) {
  int n = p.k.blocks[0].n;
  Mat<T> tt = Mat<T>::identity(n);
  // Rank of the slack fixes the block structure of every type-1/type-2 step.
  int r = rank_of(psd_block(p.k, c.z, 0), t);
  for (const auto& st : c.log.steps) {
    need<T>(st.t.rows() == n && st.t.cols() == n, "transform has the wrong size", rep);
    need<T>(rank_of(st.t, t) == n, "transform is singular", rep);
    if (st.kind == TransformKind::Type1) need<T>(is_block_diag_identity_top(st.t, r, t), "type-1 step breaks the block structure", rep);
    if (st.kind == TransformKind::Type2) {
      need<T>(is_block_diag_identity_bottom(st.t, r, t), "type-2 step breaks the block structure", rep);
      need<T>(orthogonal(st.t.block(0, 0, r, r), t), "type-2 step is not orthogonal", rep);
    }
    if (st.kind == TransformKind::Permutation) {
      bool perm = true;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          T e = st.t(i, j);
          perm = perm && (Field<T>::is_zero(e, 0.0) || Field<T>::is_zero(T(e - T(1)), 0.0));
        }
      need<T>(perm && orthogonal(st.t, t), "permutation step is not a permutation", rep);
    }
    need<T>(st.kind != TransformKind::SocRotation && st.kind != TransformKind::Scaling, "transform kind not allowed here", rep);
    tt = tt * st.t;
  }
  Sym<T> zn = psd_block(p.k, c.z, 0).congruence(tt);
  Sym<T> vn = psd_block(p.k, c.v, 0).congruence(tt);
  need<T>(vec_eq(zn.packed(), c.z_normal, t) && vec_eq(vn.packed(), c.v_normal, t), "normal form replay mismatch", rep);
  double sz = std::max(1.0, max_abs(zn.packed())), sv = std::max(1.0, max_abs(vn.packed()));
  bool zshape = true;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (i == j && i < r) {
        zshape = zshape && Field<T>::sign(zn(i, i), 0.0) > 0;
        if (c.form == NormalForm::Vform) zshape = zshape && eq0(T(zn(i, i) - T(1)), sz, t);
      } else {
        zshape = zshape && eq0(zn(i, j), sz, t);
      }
    }
  need<T>(zshape, c.form == NormalForm::Vform ? "slack is not diag(I_r, 0)" : "slack is not diag(D, 0)", rep);
  need<T>(r < n, "slack is nonsingular", rep);
  bool row = eq0(vn(r, r), sv, t);
  for (int j = r + 1; j < n; ++j) row = row && eq0(vn(r, j), sv, t);
  need<T>(row, "row r+1 of v is nonzero beyond the slack block", rep);
  if (c.form == NormalForm::Vform) {
    bool e1 = true;
    for (int i = 0; i < r; ++i) e1 = e1 && eq0(T(vn(i, r) - (i == 0 ? T(1) : T(0))), sv, t);
    need<T>(e1, "column r+1 of v is not e1", rep);
  } else {
    bool nz = false;
    for (int i = 0; i < r; ++i) nz = nz || !eq0(vn(i, r), sv, t);
    need<T>(nz, "column r+1 of v vanishes", rep);
  }
  std::vector<int> rest;
  for (int i = r + 1; i < n; ++i) rest.push_back(i);
  need<T>(is_psd(vn.principal(rest), t), "trailing block of v is not PSD", rep);
}

template <class T>
void check_soc_form(const PrimalSystem<T>& p, const BadCert<T>& c, const Tolerance& t, VerifyReport& rep) {
  Vec<T> zn = c.z, vn = c.v;
  for (const auto& st : c.log.steps) {
    if (st.kind == TransformKind::SocRotation) {
      need<T>(st.block >= 0 && st.block < static_cast<int>(p.k.blocks.size()), "rotation block out of range", rep);
      need<T>(st.t.rows() == p.k.blocks[st.block].n, "rotation has the wrong size", rep);
      need<T>(soc_automorphism(st.t, t), "rotation is not a symmetric cone automorphism", rep);
      set_block(p.k, zn, st.block, st.t * vec_block(p.k, zn, st.block));
      set_block(p.k, vn, st.block, st.t * vec_block(p.k, vn, st.block));
    } else if (st.kind == TransformKind::Scaling) {
      need<T>(st.t.rows() == 1 && Field<T>::sign(st.t(0, 0), 0.0) > 0, "scaling step is not positive", rep);
      vn = scale(vn, st.t(0, 0));
    } else {
      need<T>(false, "transform kind not allowed here", rep);
    }
  }
  need<T>(vec_eq(zn, c.z_normal, t) && vec_eq(vn, c.v_normal, t), "normal form replay mismatch", rep);
  int j = c.block;
  need<T>(j >= 0 && j < static_cast<int>(p.k.blocks.size()), "frontier block index out of range", rep);
  for (size_t b = 0; b < p.k.blocks.size(); ++b) {
    Vec<T> zb = vec_block(p.k, zn, int(b)), vb = vec_block(p.k, vn, int(b));
    ConeSpec one{{p.k.blocks[b]}};
    double sz = std::max(1.0, max_abs(zb)), sv = std::max(1.0, max_abs(vb));
    bool zero = is_zero_vec(zb, Field<T>::exact ? 0.0 : t.feas);
    bool interior = member(one, zb, true, t);
    if (zero) {
      need<T>(member(one, vb, false, t), "v outside the cone on a zero slack block", rep);
      need<T>(int(b) != j, "frontier block has a zero slack", rep);
    } else if (!interior) {
      bool shape = zb.size() >= 2 && eq0(T(zb[0] - T(1)), sz, t) && eq0(T(zb[1] - T(1)), sz, t);
      for (size_t i = 2; i < zb.size(); ++i) shape = shape && eq0(zb[i], sz, t);
      need<T>(shape, "boundary slack block is not (1; e1)", rep);
      need<T>(Field<T>::sign(T(vb[0] - vb[1]), t.feas * sv) >= 0, "v_1 < v_2 on a boundary block", rep);
      if (int(b) == j) {
        need<T>(vb.size() >= 3 && eq0(T(vb[0] - vb[1]), sv, t) && eq0(T(vb[2] - T(1)), sv, t),
                "frontier block is not (alpha; alpha; 1; ...)", rep);
      }
    } else {
      need<T>(int(b) != j, "frontier block is interior", rep);
    }
  }
}

template <class T>
void check_pcone_shape(const PrimalSystem<T>& p, const BadCert<T>& c, const Tolerance& t, VerifyReport& rep) {
  int j = c.block;
  need<T>(j >= 0 && j < static_cast<int>(p.k.blocks.size()), "frontier block index out of range", rep);
  for (size_t b = 0; b < p.k.blocks.size(); ++b) {
    const Block& bl = p.k.blocks[b];
    ConeSpec one{{bl}};
    Vec<T> zb = vec_block(p.k, c.z, int(b)), vb = vec_block(p.k, c.v, int(b));
    double sv = std::max(1.0, max_abs(vb));
    if (is_zero_vec(zb, Field<T>::exact ? 0.0 : t.feas)) {
      need<T>(member(one, vb, false, t), "v outside the cone on a zero slack block", rep);
      need<T>(int(b) != j, "frontier block has a zero slack", rep);
    } else if (!member(one, zb, true, t)) {
      Vec<T> gen = scale(zb, T(T(1) / zb[0]));
      Rational pp = bl.kind == BlockKind::SOC ? Rational(2) : bl.p;
      Vec<T> conj = pcone_conjugate(gen, pp);
      T ip = dot(vb, conj);
      need<T>(Field<T>::sign(ip, t.feas * sv) >= 0, "<v_i, z_i conjugate> < 0 on a boundary block", rep);
      if (int(b) == j) {
        need<T>(Field<T>::sign(ip, t.feas * sv) == 0, "<v_j, z_j conjugate> != 0 on the frontier block", rep);
        Tolerance lt = t;
        bool inlin = contains(span(bl.n, std::vector<Vec<T>>{zb}, lt), vb, lt);
        need<T>(!inlin, "v_j inside lin{z_j}", rep);
      }
    } else {
      need<T>(int(b) != j, "frontier block is interior", rep);
    }
  }
}

}  // namespace

template <class T>
VerifyReport verify_certificate(const PrimalSystem<T>& p, const BadCert<T>& cert, const Tolerance& tol) {
  VerifyReport rep;
  Tolerance t = check_tol<T>(tol);
  try {
    validate(p);
    need<T>(cert.available, "certificate not available", rep);
    check_slack(p, cert.z, cert.maximality, t, rep);
    std::vector<Vec<T>> g = generators(p);
    need<T>(static_cast<int>(cert.v.size()) == p.k.dim() && cert.coords.size() == g.size() &&
                vec_eq(combine(g, cert.coords, p.k.dim()), cert.v, t),
            "v not in span", rep);
    FaceDescriptor<T> f = minimal_face(p.k, cert.z, tol);
    need<T>(in_dirset(p.k, f, cert.v, DirSet::ClDir, tol), "not frontier: direction not in the closure of feasible directions", rep);
    need<T>(!in_dirset(p.k, f, cert.v, DirSet::Dir, tol), "not frontier: direction is feasible", rep);
    if (cert.block >= 0) need<T>(frontier_block(p.k, f, cert.v, tol) == cert.block, "frontier block mismatch", rep);
    switch (cert.form) {
      case NormalForm::Vform:
      case NormalForm::ScaledVform:
        need<T>(p.k.blocks.size() == 1 && p.k.blocks[0].kind == BlockKind::PSD, "normal form does not match the cone", rep);
        check_sdp_form(p, cert, t, rep);
        break;
      case NormalForm::SocForm:
        need<T>(p.k.all_of(BlockKind::SOC), "normal form does not match the cone", rep);
        check_soc_form(p, cert, t, rep);
        break;
      case NormalForm::PConeShape:
        need<T>(ray_cones(p.k), "normal form does not match the cone", rep);
        check_pcone_shape(p, cert, t, rep);
        break;
      case NormalForm::None: break;
    }
    rep.ok = true;
  } catch (const Fail& f) {
    rep.failure = f.what;
  } catch (const std::exception& e) {
    rep.failure = std::string("malformed certificate: ") + e.what();
  }
  return rep;
}

template <class T>
VerifyReport verify_certificate(const PrimalSystem<T>& p, const GoodCert<T>& cert, const Tolerance& tol) {
  VerifyReport rep;
  Tolerance t = check_tol<T>(tol);
  try {
    validate(p);
    check_slack(p, cert.z, cert.maximality, t, rep);
    need<T>(static_cast<int>(cert.u.size()) == p.k.dim(), "u has the wrong dimension", rep);
    need<T>(member(p.k.dual(), cert.u, false, t), "u not in the dual cone", rep);
    std::vector<Vec<T>> g = generators(p);
    double su = std::max(1.0, max_abs(cert.u));
    bool orth = true;
    for (const auto& gi : g) orth = orth && eq0(pair(p.k, gi, cert.u), su * std::max(1.0, max_abs(gi)), t);
    need<T>(orth, "u not orthogonal to the system", rep);
    need<T>(strictly_complementary(p.k, cert.u, cert.z, tol), "u not strictly complementary", rep);
    FaceDescriptor<T> f = minimal_face(p.k, cert.z, tol);
    Subspace<T> sg = span(p.k.dim(), g, t);
    for (const auto& w : cert.w_basis) {
      need<T>(contains(sg, w, t), "tangent subspace element not in span", rep);
      need<T>(in_dirset(p.k, f, w, DirSet::Tan, tol), "tangent subspace element not tangent", rep);
      need<T>(in_dirset(p.k, f, w, DirSet::LDir, tol), "tangent subspace element outside the lineality space", rep);
    }
    Subspace<T> wc = tangent_coefficients(p.k, f, g, t);
    std::vector<Vec<T>> full;
    for (const auto& cv : wc.basis) full.push_back(combine(g, cv, p.k.dim()));
    need<T>(span(p.k.dim(), full, t).dim() == span(p.k.dim(), cert.w_basis, t).dim(),
            "tangent subspace basis incomplete", rep);
    if (!cert.log.steps.empty()) {
      int n = p.k.blocks[0].n;
      Mat<T> tt = Mat<T>::identity(n);
      for (const auto& st : cert.log.steps) {
        need<T>(st.t.rows() == n && rank_of(st.t, t) == n, "transform is singular", rep);
        tt = tt * st.t;
      }
      auto ti = inverse(tt, t);
      need<T>(ti.has_value(), "transform is singular", rep);
      Sym<T> zn = psd_block(p.k, cert.z, 0).congruence(tt);
      Sym<T> un = psd_block(p.k, cert.u, 0).congruence(ti->transpose());
      need<T>(vec_eq(zn.packed(), cert.z_normal, t) && vec_eq(un.packed(), cert.u_normal, t), "normal form replay mismatch",
              rep);
      int r = rank_of(zn, t);
      bool shape = true;
      double sz = std::max(1.0, max_abs(zn.packed())), s2 = std::max(1.0, max_abs(un.packed()));
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          if (i != j || i >= r) shape = shape && eq0(zn(i, j), sz, t);
          if (i < r || j < r || i != j) shape = shape && eq0(un(i, j), s2, t);
        }
      need<T>(shape, "slack and u not in complementary block form", rep);
    }
    rep.ok = true;
  } catch (const Fail& f) {
    rep.failure = f.what;
  } catch (const std::exception& e) {
    rep.failure = std::string("malformed certificate: ") + e.what();
  }
  return rep;
}

template <class T>
DualVerdict<T> classify_dual_form(const DualFormSystem<T>& d, const std::optional<std::type_identity_t<Vec<T>>>& ybar, const Ctx& ctx,
                                  const ClassifyOptions& opt) {
  DualVerdict<T> out;
  out.primal = dual_to_primal(d, ctx.tol);
  std::optional<MaxSlack<T>> ms;
  if (ybar) ms = max_slack_from_claim(out.primal, *ybar, ctx);
  out.verdict = classify(out.primal, ms, ctx, opt);
  if (out.verdict.bad && !out.verdict.bad->coords.empty()) out.lambda = out.verdict.bad->coords.back();
  return out;
}

template <class T>
BadObjective<T> propose_bad_objective(const PrimalSystem<T>& p, const BadCert<T>& cert, const Vec<T>& xbar,
                                      const Tolerance& tol) {
  BadObjective<T> o;
  int m = p.m();
  if (static_cast<int>(cert.coords.size()) != m + 1 || static_cast<int>(xbar.size()) != m)
    throw DimensionMismatch("propose_bad_objective: coordinate lengths");
  for (int i = 0; i < m; ++i) o.c.push_back(cert.coords[i] + cert.coords[m] * xbar[i]);
  Vec<T> dir = combine(p.a, o.c, p.k.dim());
  FaceDescriptor<T> f = minimal_face(p.k, cert.z, tol);
  o.frontier = frontier_member(p.k, f, dir, tol);
  return o;
}

#define CONICD_INST(T)                                                                                          \
  template Verdict<T> classify(const PrimalSystem<T>&, const std::optional<MaxSlack<T>>&, const Ctx&,          \
                               const ClassifyOptions&);                                                        \
  template SdpNormalization<T> normalize_sdp(const PrimalSystem<T>&, const Vec<T>&, const Tolerance&);         \
  template SocNormalization<T> socp_normalize(const PrimalSystem<T>&, const Vec<T>&, const Tolerance&);        \
  template void present_bad_certificate(const PrimalSystem<T>&, BadCert<T>&, const Ctx&);                      \
  template VerifyReport verify_certificate(const PrimalSystem<T>&, const BadCert<T>&, const Tolerance&);       \
  template VerifyReport verify_certificate(const PrimalSystem<T>&, const GoodCert<T>&, const Tolerance&);      \
  template DualVerdict<T> classify_dual_form(const DualFormSystem<T>&, const std::optional<Vec<T>>&,           \
                                             const Ctx&, const ClassifyOptions&);                              \
  template BadObjective<T> propose_bad_objective(const PrimalSystem<T>&, const BadCert<T>&, const Vec<T>&,     \
                                                 const Tolerance&);
CONICD_INST(double)
CONICD_INST(Rational)
#undef CONICD_INST

}  // namespace conicd
