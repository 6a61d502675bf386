#include "conicd/oracles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace conicd {

const char* status_name(OracleStatus s) {
  switch (s) {
    case OracleStatus::Feasible: return "feasible";
    case OracleStatus::Infeasible: return "infeasible";
    case OracleStatus::Unknown: return "unknown";
  }
  return "?";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Smoothing of |x_i| inside the p-cone barrier.
constexpr double kPConeSmooth = 1e-9;

struct BarrierEval {
  bool ok = false;
  double val = 0;
  VectorXd g;
  MatrixXd h;
};

bool psd_barrier(int n, const double* x, double* val, VectorXd& g, MatrixXd& h, int off) {
  if (n == 0) return true;
  MatrixXd X(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) X(i, j) = X(j, i) = x[Sym<double>::index(n, i, j)];
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return false;
  MatrixXd L = llt.matrixL();
  double ld = 0;
  for (int i = 0; i < n; ++i) {
    if (!(L(i, i) > 0)) return false;
    ld += std::log(L(i, i));
  }
  *val += -2 * ld;
  MatrixXd W = llt.solve(MatrixXd::Identity(n, n));
  std::vector<std::pair<int, int>> idx;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) idx.push_back({i, j});
  int p = static_cast<int>(idx.size());
  for (int a = 0; a < p; ++a) {
    auto [i, j] = idx[a];
    g(off + a) = i == j ? -W(i, i) : -2 * W(i, j);
    double ca = i == j ? 0.5 : 1.0;
    for (int b = a; b < p; ++b) {
      auto [k, l] = idx[b];
      double cb = k == l ? 0.5 : 1.0;
      double v = ca * cb * (W(l, i) * W(j, k) + W(k, i) * W(j, l) + W(l, j) * W(i, k) + W(k, j) * W(i, l));
      h(off + a, off + b) = h(off + b, off + a) = v;
    }
  }
  return true;
}

bool soc_barrier(int m, const double* x, double* val, VectorXd& g, MatrixXd& h, int off) {
  if (!(x[0] > 0)) return false;
  double s = 0;
  for (int i = 1; i < m; ++i) s += x[i] * x[i];
  double q = x[0] * x[0] - s;
  if (!(q > 0)) return false;
  *val += -std::log(q);
  VectorXd jx(m);
  jx(0) = x[0];
  for (int i = 1; i < m; ++i) jx(i) = -x[i];
  g.segment(off, m) = -2 * jx / q;
  MatrixXd hb = 4 * jx * jx.transpose() / (q * q);
  hb(0, 0) -= 2 / q;
  for (int i = 1; i < m; ++i) hb(i, i) += 2 / q;
  h.block(off, off, m, m) = hb;
  return true;
}

bool pcone_barrier(int m, double p, const double* x, double* val, VectorXd& g, MatrixXd& h, int off) {
  if (m == 1) {
    if (!(x[0] > 0)) return false;
    *val += -std::log(x[0]);
    g(off) = -1 / x[0];
    h(off, off) = 1 / (x[0] * x[0]);
    return true;
  }
  const double eps = kPConeSmooth;
  int t = m - 1;
  VectorXd s(t), a(t);
  double mx = 0;
  for (int i = 0; i < t; ++i) {
    s(i) = std::sqrt(x[i + 1] * x[i + 1] + eps * eps);
    mx = std::max(mx, s(i));
  }
  double sum = 0;
  for (int i = 0; i < t; ++i) sum += std::pow(s(i) / mx, p);
  double N = mx * std::pow(sum, 1 / p);
  double f = x[0] - N;
  if (!(f > 0)) return false;
  for (int i = 0; i < t; ++i) a(i) = std::pow(s(i), p - 2) * x[i + 1];
  double np = std::pow(N, 1 - p);
  VectorXd dn = np * a;
  MatrixXd hn = (1 - p) * std::pow(N, 1 - 2 * p) * a * a.transpose();
  for (int i = 0; i < t; ++i)
    hn(i, i) += np * (std::pow(s(i), p - 2) + (p - 2) * std::pow(s(i), p - 4) * x[i + 1] * x[i + 1]);
  *val += -std::log(f);
  VectorXd df(m);
  df(0) = 1;
  df.tail(t) = -dn;
  g.segment(off, m) = -df / f;
  MatrixXd hb = df * df.transpose() / (f * f);
  hb.bottomRightCorner(t, t) += hn / f;
  h.block(off, off, m, m) = hb;
  return true;
}

BarrierEval barrier(const ConeSpec& k, const VectorXd& x) {
  BarrierEval e;
  int d = k.dim();
  e.g = VectorXd::Zero(d);
  e.h = MatrixXd::Zero(d, d);
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    int off = k.offset(int(b));
    const double* xb = x.data() + off;
    bool ok = true;
    switch (bl.kind) {
      case BlockKind::PSD: ok = psd_barrier(bl.n, xb, &e.val, e.g, e.h, off); break;
      case BlockKind::SOC: ok = soc_barrier(bl.n, xb, &e.val, e.g, e.h, off); break;
      case BlockKind::PCone: ok = pcone_barrier(bl.n, bl.p.get_d(), xb, &e.val, e.g, e.h, off); break;
      case BlockKind::Orthant:
        for (int i = 0; i < bl.n; ++i) {
          if (!(xb[i] > 0)) {
            ok = false;
            break;
          }
          e.val += -std::log(xb[i]);
          e.g(off + i) = -1 / xb[i];
          e.h(off + i, off + i) = 1 / (xb[i] * xb[i]);
        }
        break;
    }
    if (!ok) return e;
  }
  e.ok = true;
  return e;
}

VectorXd to_eigen(const Vec<double>& v) { return Eigen::Map<const VectorXd>(v.data(), v.size()); }
Vec<double> from_eigen(const VectorXd& v) { return Vec<double>(v.data(), v.data() + v.size()); }

}  // namespace

MarginResult max_margin(const ConeSpec& k, const std::vector<Vec<double>>& basis, const SearchOptions& opt,
                        OracleStats* stats) {
  MarginResult res;
  int d = k.dim();
  Vec<int> w = pairing_weights(k);
  VectorXd e = to_eigen(unit_point<double>(k));
  VectorXd ew = e;
  for (int i = 0; i < d; ++i) ew(i) *= w[i];
  int kdim = static_cast<int>(basis.size());
  if (kdim == 0) {
    res.orthogonal = true;
    return res;
  }
  MatrixXd B(d, kdim);
  for (int j = 0; j < kdim; ++j) B.col(j) = to_eigen(basis[j]);
  // Orthonormal basis of the subspace.
  Eigen::ColPivHouseholderQR<MatrixXd> qr(B);
  qr.setThreshold(1e-12);
  int r = static_cast<int>(qr.rank());
  if (r == 0) {
    res.orthogonal = true;
    return res;
  }
  MatrixXd Q = MatrixXd(qr.householderQ()).leftCols(r);
  VectorXd c = Q.transpose() * ew;
  if (c.norm() <= 1e-12 * std::max(1.0, ew.norm())) {
    res.orthogonal = true;
    return res;
  }
  VectorXd y0 = Q * c / c.squaredNorm();
  // Directions inside the subspace that keep <y, e> fixed.
  Eigen::JacobiSVD<MatrixXd> svd(c.transpose(), Eigen::ComputeFullV);
  MatrixXd N = Q * svd.matrixV().rightCols(r - 1);
  int nv = r;  // theta (r-1) and t
  MatrixXd J(d, nv);
  J.leftCols(r - 1) = N;
  J.col(r - 1) = -e;

  double t0 = margin(k, from_eigen(y0)) - 1;
  VectorXd z = VectorXd::Zero(nv);
  z(nv - 1) = t0;
  auto xof = [&](const VectorXd& zz) { VectorXd x = y0 + J * zz; return x; };

  int steps = 0;
  for (double mu = 1; mu >= 1e-13 && steps < opt.iterations; mu *= 0.1) {
    for (int it = 0; it < 80 && steps < opt.iterations; ++it) {
      BarrierEval be = barrier(k, xof(z));
      if (!be.ok) break;
      VectorXd grad = J.transpose() * be.g;
      grad(nv - 1) -= 1 / mu;
      MatrixXd H = J.transpose() * be.h * J;
      double ridge = 1e-14 * (H.diagonal().cwiseAbs().maxCoeff() + 1);
      H.diagonal().array() += ridge;
      VectorXd dz = H.ldlt().solve(-grad);
      if (!dz.allFinite()) break;
      double dec = -grad.dot(dz);
      ++steps;
      if (dec / 2 < 1e-9) break;
      double psi0 = be.val - z(nv - 1) / mu;
      double alpha = 1;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        VectorXd zn = z + alpha * dz;
        BarrierEval bn = barrier(k, xof(zn));
        if (!bn.ok) continue;
        double psi = bn.val - zn(nv - 1) / mu;
        if (psi <= psi0 - 0.25 * alpha * dec) {
          z = zn;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
  }
  if (stats) stats->newton_steps += steps;
  VectorXd y = y0 + N * z.head(r - 1);
  res.y = from_eigen(y);
  res.t = margin(k, res.y);
  res.steps = steps;
  return res;
}

template <class T>
Subspace<T> pair_complement(const ConeSpec& k, const Subspace<T>& s, const Tolerance& tol) {
  Vec<int> w = pairing_weights(k);
  Mat<T> m(s.dim(), k.dim());
  for (int j = 0; j < s.dim(); ++j)
    for (int i = 0; i < k.dim(); ++i) m(j, i) = s.basis[j][i] * T(w[i]);
  return nullspace(m, tol);
}

template <class T>
Subspace<T> preimage(const Mat<T>& map, const Subspace<T>& s, const Tolerance& tol) {
  int r = map.cols();
  Mat<T> m = map.hcat(s.matrix().scaled(T(-1)));
  Subspace<T> ns = nullspace(m, tol);
  std::vector<Vec<T>> vs;
  for (const auto& v : ns.basis) vs.emplace_back(v.begin(), v.begin() + r);
  return span(r, vs, tol);
}

std::vector<Vec<Rational>> rational_candidates(const Vec<double>& c) {
  std::vector<Vec<Rational>> out;
  double sc = 0;
  for (double x : c) sc = std::max(sc, std::fabs(x));
  if (sc == 0 || !std::isfinite(sc)) {
    out.push_back(Vec<Rational>(c.size(), Rational(0)));
    return out;
  }
  static const long dens[] = {1, 2, 3, 4, 6, 8, 10, 12, 16, 20, 24, 100, 1000, 10000, 100000, 1000000, 10000000,
                              100000000};
  std::set<std::vector<std::string>> seen;
  auto push = [&](Vec<Rational> v) {
    std::vector<std::string> key;
    for (auto& q : v) {
      q.canonicalize();
      key.push_back(q.get_str());
    }
    if (seen.insert(key).second) out.push_back(std::move(v));
  };
  for (long den : dens) {
    Vec<Rational> v;
    for (double x : c) v.push_back(best_rational(x / sc, den));
    push(std::move(v));
  }
  Vec<Rational> v;
  for (double x : c) v.push_back(Rational(x / sc));
  push(std::move(v));
  return out;
}

namespace {

// First nonzero coordinate of each RREF basis vector.
template <class T>
std::vector<int> pivots_of(const Subspace<T>& s) {
  std::vector<int> p;
  for (const auto& v : s.basis) {
    int i = 0;
    while (i < s.ambient && Field<T>::is_zero(v[i], 0.0)) ++i;
    p.push_back(i);
  }
  return p;
}

Vec<Rational> combine(const Subspace<Rational>& s, const Vec<Rational>& c) {
  Vec<Rational> v(s.ambient, Rational(0));
  for (int j = 0; j < s.dim(); ++j) v = axpy(v, c[j], s.basis[j]);
  return v;
}

// Rational points of s near the float point y (s is in RREF, so the
// coordinates of y at the pivots are its coefficients).
std::vector<Vec<Rational>> nearby_points(const Subspace<Rational>& s, const Vec<double>& y) {
  std::vector<int> piv = pivots_of(s);
  Vec<double> c;
  for (int p : piv) c.push_back(y[p]);
  std::vector<Vec<Rational>> out;
  for (const auto& q : rational_candidates(c)) out.push_back(combine(s, q));
  return out;
}

// Rational subspace spanned (approximately) by the columns of m.
std::optional<Subspace<Rational>> snap_columns(const Mat<double>& m, const Tolerance& tol) {
  if (m.cols() == 0) return Subspace<Rational>{m.rows(), {}};
  Mat<double> rows = m.transpose();
  std::vector<int> piv = rref(rows, tol);
  std::vector<Vec<Rational>> vs;
  for (size_t i = 0; i < piv.size(); ++i) {
    Vec<Rational> v;
    for (int j = 0; j < rows.cols(); ++j) {
      double x = rows(int(i), j);
      Rational q = best_rational(x, 10000);
      if (std::fabs(q.get_d() - x) > 1e-6) return std::nullopt;
      v.push_back(q);
    }
    vs.push_back(v);
  }
  Tolerance exact{0, 0, 0};
  Subspace<Rational> s = span(m.rows(), vs, exact);
  if (s.dim() != m.cols()) return std::nullopt;
  return s;
}

// Rational version of a float face; nullopt when some block has no
// nearby rational description.
std::optional<FaceDescriptor<Rational>> snap_face(const ConeSpec& k, const FaceDescriptor<double>& f) {
  Tolerance exact{0, 0, 0};
  FaceDescriptor<Rational> out;
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const BlockFace<double>& bf = f.blocks[b];
    BlockFace<Rational> q;
    q.kind = bf.kind;
    q.tag = bf.tag;
    q.support = bf.support;
    switch (bf.kind) {
      case BlockKind::PSD: {
        int n = k.blocks[b].n;
        auto rs = snap_columns(bf.range, Tolerance{1e-7, 1e-7, 1e-7});
        if (!rs) return std::nullopt;
        q.rank = rs->dim();
        q.range = rs->matrix();
        Subspace<Rational> nl = orth_complement(*rs, exact);
        q.null = nl.matrix();
        if (q.null.rows() != n) q.null = Mat<Rational>(n, 0);
        break;
      }
      case BlockKind::SOC:
      case BlockKind::PCone:
        if (bf.tag == RayTag::Ray) {
          Vec<Rational> g;
          for (double x : bf.gen) g.push_back(best_rational(x, 10000));
          // The generator must sit exactly on the boundary.
          ConeSpec one{{k.blocks[b]}};
          if (!member(one, g, false, exact) || member(one, g, true, exact)) return std::nullopt;
          q.gen = g;
        }
        break;
      case BlockKind::Orthant: break;
    }
    out.blocks.push_back(q);
  }
  return out;
}

template <class T>
bool verify_point(const ConeSpec& k, const Vec<T>& v, bool strict, const Ctx& ctx) {
  if constexpr (Field<T>::exact) {
    Tolerance exact{0, 0, 0};
    return member(k, v, strict, exact, &ctx.caveats);
  } else {
    return member(k, v, strict, ctx.tol, &ctx.caveats);
  }
}

template <class T>
OracleResult<T> finish(OracleResult<T> r, const Ctx& ctx) {
  switch (r.status) {
    case OracleStatus::Feasible: ++ctx.stats.feasible; break;
    case OracleStatus::Infeasible: ++ctx.stats.infeasible; break;
    case OracleStatus::Unknown: ++ctx.stats.unknown; break;
  }
  if (r.borderline) ctx.caveats.add(caveat::kBorderline);
  return r;
}

}  // namespace

template <class T>
OracleResult<T> strict_feasibility_in_face(const ConeSpec& k, const Subspace<T>& s_in, const Ctx& ctx) {
  ++ctx.stats.solves;
  OracleResult<T> res;
  const int d = k.dim();
  if (s_in.ambient != d) throw DimensionMismatch("strict_feasibility_in_face: subspace does not match the cone");
  if (d == 0) {
    res.status = OracleStatus::Feasible;
    return finish(res, ctx);
  }
  const Tolerance& tol = ctx.tol;
  Subspace<T> s = span(d, s_in.basis, tol);
  ConeSpec kd = k.dual();
  Vec<T> e = unit_point<T>(k);
  if (s.dim() == 0) {
    res.status = OracleStatus::Infeasible;
    res.witness = unit_point<T>(kd);
    return finish(res, ctx);
  }
  std::vector<Vec<double>> sd;
  for (const auto& v : s.basis) sd.push_back(convert_vec<T, double>(v));
  MarginResult mp = max_margin(k, sd, ctx.budget, &ctx.stats);
  res.margin = mp.t;
  const double thr = 10 * tol.feas;

  if (mp.orthogonal) {
    Vec<T> u = unit_point<T>(kd);
    bool orth = true;
    for (const auto& v : s.basis) orth = orth && Field<T>::is_zero(pair(k, u, v), tol.feas);
    if (orth) {
      res.status = OracleStatus::Infeasible;
      res.witness = u;
      return finish(res, ctx);
    }
  } else if (mp.t > 0) {
    if constexpr (Field<T>::exact) {
      for (const auto& cand : nearby_points(s, mp.y))
        if (verify_point(k, cand, true, ctx)) {
          res.status = OracleStatus::Feasible;
          res.witness = cand;
          return finish(res, ctx);
        }
    } else {
      if (mp.t > tol.feas * 1e-2 && mp.t < tol.feas * 1e2) res.borderline = true;
      if (mp.t > thr && verify_point(k, mp.y, true, ctx)) {
        res.status = OracleStatus::Feasible;
        res.witness = mp.y;
        return finish(res, ctx);
      }
    }
  }

  Subspace<T> sp = pair_complement(k, s, tol);
  if (sp.dim() == 0) {
    // S is everything; the reference point is interior.
    res.status = OracleStatus::Feasible;
    res.witness = e;
    return finish(res, ctx);
  }
  std::vector<Vec<double>> spd;
  for (const auto& v : sp.basis) spd.push_back(convert_vec<T, double>(v));
  MarginResult md = max_margin(kd, spd, ctx.budget, &ctx.stats);
  if (md.orthogonal) {
    if (contains(s, e, tol) && verify_point(k, e, true, ctx)) {
      res.status = OracleStatus::Feasible;
      res.witness = e;
    } else {
      res.note = "degenerate dual search";
    }
    return finish(res, ctx);
  }
  if constexpr (Field<T>::exact) {
    Tolerance exact{0, 0, 0};
    auto accept = [&](const Vec<Rational>& u) {
      return !is_zero_vec(u, 0.0) && member(kd, u, false, exact, &ctx.caveats);
    };
    for (const auto& cand : nearby_points(sp, md.y))
      if (accept(cand)) {
        res.status = OracleStatus::Infeasible;
        res.witness = cand;
        return finish(res, ctx);
      }
    // Snap to the face of k* carrying the float solution and retry inside it.
    for (double rk : {1e-9, 1e-7, 1e-5, 1e-3}) {
      Tolerance loose{rk, 1e-6, 1e-8};
      FaceDescriptor<double> fd;
      try {
        Vec<double> yd = md.y;
        fd = minimal_face(kd, yd, loose);
      } catch (const std::exception&) {
        continue;
      }
      auto fq = snap_face(kd, fd);
      if (!fq) continue;
      FaceEmbedding<Rational> emb = embed_face(kd, *fq);
      Subspace<Rational> lin = span(kd.dim(), emb.map.columns(), exact);
      Subspace<Rational> v = intersect(sp, lin, exact);
      if (v.dim() == 0) continue;
      for (const auto& cand : nearby_points(v, md.y))
        if (accept(cand)) {
          res.status = OracleStatus::Infeasible;
          res.witness = cand;
          return finish(res, ctx);
        }
    }
  } else {
    Vec<double> u = md.y;
    double mx = max_abs(u);
    if (mx > 0) u = scale(u, 1 / mx);
    if (mp.t > -thr && mp.t < thr) res.borderline = res.borderline || std::fabs(mp.t) > tol.feas * 1e-2;
    if (mx > 0 && member(kd, u, false, tol, &ctx.caveats)) {
      res.status = OracleStatus::Infeasible;
      res.witness = u;
      return finish(res, ctx);
    }
  }
  res.note = "no verified witness";
  return finish(res, ctx);
}

namespace {

template <class T>
bool nonzero_scalar(const T& s, double thr) {
  if constexpr (Field<T>::exact)
    return sgn(s) != 0;
  else
    return std::fabs(s) > thr;
}

template <class T>
FaceEmbedding<T> identity_embedding(const ConeSpec& k) {
  FaceEmbedding<T> e;
  e.reduced = k;
  e.map = Mat<T>::identity(k.dim());
  for (size_t b = 0; b < k.blocks.size(); ++b) e.origin.push_back(int(b));
  return e;
}

template <class T>
void advance(FaceEmbedding<T>& emb, const Vec<T>& u, const Tolerance& tol, Caveats* cav) {
  FaceDescriptor<T> f = exposed_face(emb.reduced, u, tol, cav);
  FaceEmbedding<T> sub = embed_face(emb.reduced, f);
  FaceEmbedding<T> out;
  out.reduced = sub.reduced;
  out.map = emb.map * sub.map;
  for (int o : sub.origin) out.origin.push_back(emb.origin[o]);
  emb = std::move(out);
}

// Reduced subspace of the affine problem: {(theta, beta) : L theta in R(A) + beta b}.
template <class T>
Subspace<T> affine_reduced(const Mat<T>& L, const std::vector<Vec<T>>& a, const Vec<T>& b, const Tolerance& tol) {
  int d = L.rows(), r = L.cols(), m = static_cast<int>(a.size());
  Mat<T> M(d, r + m + 1);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < r; ++j) M(i, j) = L(i, j);
    for (int j = 0; j < m; ++j) M(i, r + j) = -a[j][i];
    M(i, r + m) = -b[i];
  }
  Subspace<T> ns = nullspace(M, tol);
  std::vector<Vec<T>> vs;
  for (const auto& v : ns.basis) {
    Vec<T> w(v.begin(), v.begin() + r);
    w.push_back(v[r + m]);
    vs.push_back(w);
  }
  return span(r + 1, vs, tol);
}

ConeSpec with_ray(const ConeSpec& k) {
  ConeSpec c = k;
  c.blocks.push_back(Block::orthant(1));
  return c;
}

}  // namespace

template <class T>
FRResult<T> facial_reduction(const ConeSpec& k, const std::vector<Vec<T>>& a, const Vec<T>& b, const Ctx& ctx) {
  const Tolerance& tol = ctx.tol;
  FRResult<T> fr;
  FaceEmbedding<T> emb = identity_embedding<T>(k);
  for (int iter = 0; iter <= k.dim() + 1; ++iter) {
    int r = emb.reduced.dim();
    Subspace<T> sp = affine_reduced(emb.map, a, b, tol);
    ConeSpec c = with_ray(emb.reduced);
    OracleResult<T> o = strict_feasibility_in_face(c, sp, ctx);
    fr.borderline = fr.borderline || o.borderline;
    if (o.status == OracleStatus::Unknown) {
      fr.status = OracleStatus::Unknown;
      fr.face = emb;
      fr.log.push_back("oracle undecided on " + c.str());
      return fr;
    }
    if (o.status == OracleStatus::Feasible) {
      Vec<T> theta(o.witness.begin(), o.witness.begin() + r);
      T beta = o.witness[r];
      fr.slack = scale(emb.map * theta, T(T(1) / beta));
      auto x = solve_in_span(a, sub(b, fr.slack), tol);
      fr.x = x ? *x : Vec<T>(a.size(), T(0));
      fr.status = OracleStatus::Feasible;
      fr.face = emb;
      fr.log.push_back("relative interior slack found in " + emb.reduced.str());
      return fr;
    }
    Vec<T> u(o.witness.begin(), o.witness.begin() + r);
    T s = o.witness[r];
    double thr = tol.feas * std::max(1.0, max_abs(o.witness));
    if (nonzero_scalar(s, thr) || is_zero_vec(u, Field<T>::exact ? 0.0 : thr)) {
      fr.status = OracleStatus::Infeasible;
      fr.certificate = o.witness;
      fr.face = emb;
      fr.log.push_back("infeasibility certificate found");
      return fr;
    }
    fr.chain.push_back({emb.reduced, emb.map, u});
    advance(emb, u, tol, &ctx.caveats);
    fr.log.push_back("reduced to " + (emb.reduced.blocks.empty() ? std::string("{0}") : emb.reduced.str()));
  }
  fr.status = OracleStatus::Unknown;
  fr.face = emb;
  return fr;
}

template <class T>
FRResult<T> facial_reduction_subspace(const ConeSpec& k, const Subspace<T>& s, const Ctx& ctx) {
  const Tolerance& tol = ctx.tol;
  FRResult<T> fr;
  FaceEmbedding<T> emb = identity_embedding<T>(k);
  for (int iter = 0; iter <= k.dim() + 1; ++iter) {
    if (emb.reduced.dim() == 0) {
      fr.status = OracleStatus::Feasible;
      fr.slack = Vec<T>(k.dim(), T(0));
      fr.face = emb;
      return fr;
    }
    Subspace<T> sp = preimage(emb.map, s, tol);
    OracleResult<T> o = strict_feasibility_in_face(emb.reduced, sp, ctx);
    fr.borderline = fr.borderline || o.borderline;
    if (o.status == OracleStatus::Unknown) break;
    if (o.status == OracleStatus::Feasible) {
      fr.status = OracleStatus::Feasible;
      fr.slack = emb.map * o.witness;
      fr.face = emb;
      return fr;
    }
    fr.chain.push_back({emb.reduced, emb.map, o.witness});
    advance(emb, o.witness, tol, &ctx.caveats);
  }
  fr.status = OracleStatus::Unknown;
  fr.face = emb;
  return fr;
}

template <class T>
bool verify_fr_chain(const ConeSpec& k, const std::vector<Vec<T>>& a, const Vec<T>& b, const FRResult<T>& fr,
                     const Tolerance& tol, std::string* why) {
  auto fail = [&](const std::string& w) {
    if (why) *why = w;
    return false;
  };
  Tolerance t = Field<T>::exact ? Tolerance{0, 0, 0} : tol;
  FaceEmbedding<T> emb = identity_embedding<T>(k);
  for (size_t i = 0; i < fr.chain.size(); ++i) {
    const FRStep<T>& st = fr.chain[i];
    if (!(st.cone == emb.reduced)) return fail("chain step " + std::to_string(i) + ": cone mismatch");
    if (static_cast<int>(st.u.size()) != emb.reduced.dim()) return fail("chain step " + std::to_string(i) + ": size");
    if (is_zero_vec(st.u, Field<T>::exact ? 0.0 : t.feas)) return fail("chain step " + std::to_string(i) + ": zero");
    if (!member(emb.reduced.dual(), st.u, false, t)) return fail("chain step " + std::to_string(i) + ": not dual");
    Subspace<T> sp = affine_reduced(emb.map, a, b, t);
    Vec<T> ue = st.u;
    ue.push_back(T(0));
    ConeSpec c = with_ray(emb.reduced);
    for (const auto& v : sp.basis)
      if (!Field<T>::is_zero(pair(c, ue, v), t.feas * std::max(1.0, max_abs(v))))
        return fail("chain step " + std::to_string(i) + ": not orthogonal");
    advance(emb, st.u, t, nullptr);
  }
  if (!(emb.reduced == fr.face.reduced)) return fail("final face mismatch");
  if (fr.status == OracleStatus::Feasible) {
    if (!member(k, fr.slack, false, t)) return fail("slack not in cone");
    if (!solve_in_span(a, sub(b, fr.slack), t)) return fail("slack not feasible");
    auto theta = solve_linear(emb.map, fr.slack, t);
    if (!theta) return fail("slack outside final face");
    if (!member(emb.reduced, *theta, true, t)) return fail("slack not relatively interior");
  }
  return true;
}

template <class T>
OracleResult<T> subspace_meets_cone_outside_face(const Subspace<T>& s, const ConeSpec& k, const FaceDescriptor<T>& f,
                                                 const Ctx& ctx) {
  OracleResult<T> res;
  FRResult<T> fr = facial_reduction_subspace(k, s, ctx);
  res.borderline = fr.borderline;
  if (fr.status != OracleStatus::Feasible) return res;
  if (in_face_span(k, f, fr.slack, ctx.tol)) {
    res.status = OracleStatus::Infeasible;
    res.witness = fr.slack;
  } else {
    res.status = OracleStatus::Feasible;
    res.witness = fr.slack;
  }
  return res;
}

namespace {

// Rows of Y22 d = 0 for a PSD block, with Y22 = N^T V N.
template <class T>
std::vector<Vec<T>> null_dir_rows(const ConeSpec& k, const FaceDescriptor<T>& f, int b, const Vec<T>& dv) {
  std::vector<Vec<T>> rows;
  const Block& bl = k.blocks[b];
  const Mat<T>& N = f.blocks[b].null;
  int off = k.offset(b), d = k.dim(), q = N.cols();
  Vec<T> nd(bl.n, T(0));
  for (int i = 0; i < bl.n; ++i)
    for (int c = 0; c < q; ++c) nd[i] += N(i, c) * dv[c];
  for (int a = 0; a < q; ++a) {
    // (N^T V N d)_a = sum_ij N(i,a) V(i,j) nd(j)
    Vec<T> row(d, T(0));
    for (int i = 0; i < bl.n; ++i)
      for (int j = 0; j < bl.n; ++j) {
        T v = N(i, a) * nd[j];
        row[off + Sym<T>::index(bl.n, std::min(i, j), std::max(i, j))] += v;
      }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

template <class T>
std::optional<Vec<T>> brute_frontier_search(const std::vector<Vec<T>>& gens, const ConeSpec& k,
                                            const FaceDescriptor<T>& f, int budget, std::uint64_t seed,
                                            const Tolerance& tol) {
  const int m = static_cast<int>(gens.size());
  const int d = k.dim();
  if (m == 0) return std::nullopt;
  std::mt19937_64 rng(seed);
  Mat<T> G = Mat<T>::from_columns(gens, d);

  // Candidate coefficient subspaces: the whole span, then cuts forcing
  // one block (or a null direction of one PSD block) onto the tangent set.
  std::vector<std::vector<Vec<T>>> cuts;
  cuts.push_back({});
  for (int b = 0; b < static_cast<int>(k.blocks.size()); ++b) {
    auto tr = tangent_equations(k, f, b);
    if (!tr.empty()) cuts.push_back(tr);
    const Block& bl = k.blocks[b];
    if (bl.kind == BlockKind::PSD) {
      int q = f.blocks[b].null.cols();
      if (q >= 2 && q <= 3) {
        int total = 1;
        for (int i = 0; i < q; ++i) total *= 5;
        for (int code = 0; code < total; ++code) {
          Vec<T> dv(q);
          int c = code;
          bool nz = false, first_pos = false, seen = false;
          for (int i = 0; i < q; ++i) {
            int x = c % 5 - 2;
            c /= 5;
            dv[i] = T(x);
            if (x != 0 && !seen) {
              seen = true;
              first_pos = x > 0;
            }
            nz = nz || x != 0;
          }
          if (!nz || !first_pos) continue;
          cuts.push_back(null_dir_rows(k, f, b, dv));
        }
      }
    }
  }

  int evals = 0;
  for (const auto& rows : cuts) {
    Subspace<T> cs;
    if (rows.empty()) {
      cs = nullspace(Mat<T>(0, m), tol);
    } else {
      Mat<T> R(static_cast<int>(rows.size()), d);
      for (size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < d; ++j) R(int(i), j) = rows[i][j];
      cs = nullspace(R * G, tol);
    }
    int q = cs.dim();
    if (q == 0) continue;
    auto test = [&](const Vec<T>& coef) -> std::optional<Vec<T>> {
      Vec<T> c(m, T(0));
      for (int j = 0; j < q; ++j) c = axpy(c, coef[j], cs.basis[j]);
      Vec<T> v = G * c;
      if (is_zero_vec(v, Field<T>::exact ? 0.0 : tol.feas)) return std::nullopt;
      if (frontier_member(k, f, v, tol)) return v;
      return std::nullopt;
    };
    if (q <= 3) {
      int total = 1;
      for (int i = 0; i < q; ++i) total *= 7;
      for (int code = 0; code < total && evals < budget; ++code, ++evals) {
        Vec<T> coef(q);
        int c = code;
        for (int i = 0; i < q; ++i) {
          coef[i] = T(c % 7 - 3);
          c /= 7;
        }
        if (auto v = test(coef)) return v;
      }
    } else {
      std::uniform_int_distribution<int> dist(-3, 3);
      for (int it = 0; it < 400 && evals < budget; ++it, ++evals) {
        Vec<T> coef(q);
        for (auto& x : coef) x = T(dist(rng));
        if (auto v = test(coef)) return v;
      }
    }
    if (evals >= budget) break;
  }
  return std::nullopt;
}

#define CONICD_INST(T)                                                                                             \
  template Subspace<T> pair_complement(const ConeSpec&, const Subspace<T>&, const Tolerance&);                     \
  template Subspace<T> preimage(const Mat<T>&, const Subspace<T>&, const Tolerance&);                              \
  template OracleResult<T> strict_feasibility_in_face(const ConeSpec&, const Subspace<T>&, const Ctx&);            \
  template FRResult<T> facial_reduction(const ConeSpec&, const std::vector<Vec<T>>&, const Vec<T>&, const Ctx&);   \
  template FRResult<T> facial_reduction_subspace(const ConeSpec&, const Subspace<T>&, const Ctx&);                 \
  template bool verify_fr_chain(const ConeSpec&, const std::vector<Vec<T>>&, const Vec<T>&, const FRResult<T>&,    \
                                const Tolerance&, std::string*);                                                   \
  template OracleResult<T> subspace_meets_cone_outside_face(const Subspace<T>&, const ConeSpec&,                   \
                                                            const FaceDescriptor<T>&, const Ctx&);                 \
  template std::optional<Vec<T>> brute_frontier_search(const std::vector<Vec<T>>&, const ConeSpec&,                \
                                                       const FaceDescriptor<T>&, int, std::uint64_t, const Tolerance&);
CONICD_INST(double)
CONICD_INST(Rational)
#undef CONICD_INST

}  // namespace conicd
