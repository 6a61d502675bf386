#include "conicd/reducer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace conicd {

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::Rotation: return "Rotation";
    case OpKind::Contraction: return "Contraction";
    case OpKind::DeleteRows: return "DeleteRows";
    case OpKind::DeleteMatrix: return "DeleteMatrix";
  }
  return "?";
}

namespace {

template <class T>
bool zero(const T& x, double scale, const Tolerance& tol) {
  if constexpr (Field<T>::exact)
    return sgn(x) == 0;
  else
    return std::fabs(x) <= std::max(tol.feas, 1e-9) * std::max(1.0, scale);
}

template <class T>
bool same(const T& x, const T& y, const Tolerance& tol) {
  return zero(T(x - y), std::max(std::fabs(Field<T>::to_double(x)), std::fabs(Field<T>::to_double(y))), tol);
}

template <class T>
bool is_identity(const Mat<T>& m, const Tolerance& tol) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (!same(m(i, j), i == j ? T(1) : T(0), tol)) return false;
  return true;
}

template <class T>
bool lorentz(const Mat<T>& m, const Tolerance& tol) {
  int n = m.rows();
  if (Field<T>::sign(m(0, 0), 0.0) <= 0) return false;
  Mat<T> j = Mat<T>::identity(n);
  for (int i = 1; i < n; ++i) j(i, i) = T(-1);
  Mat<T> g = m.transpose() * j * m;
  T lam = g(0, 0);
  if (Field<T>::sign(lam, 0.0) <= 0) return false;
  double sc = std::max(1.0, max_abs(g));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (!zero(T(g(a, b) - lam * j(a, b)), sc, tol)) return false;
  return true;
}

// One nonzero per row and column; positive entries when `positive`.
template <class T>
bool monomial(const Mat<T>& m, bool positive, const Tolerance& tol) {
  int n = m.rows();
  std::vector<int> cols(n, 0);
  for (int i = 0; i < n; ++i) {
    int nz = 0;
    for (int j = 0; j < n; ++j)
      if (!zero(m(i, j), 1.0, tol)) {
        ++nz;
        ++cols[j];
        if (positive && Field<T>::sign(m(i, j), 0.0) < 0) return false;
      }
    if (nz != 1) return false;
  }
  return std::all_of(cols.begin(), cols.end(), [](int c) { return c == 1; });
}

// s * diag(1, P) with P a signed permutation and s > 0.
template <class T>
bool pcone_automorphism(const Mat<T>& m, const Tolerance& tol) {
  int n = m.rows();
  if (Field<T>::sign(m(0, 0), 0.0) <= 0) return false;
  for (int i = 1; i < n; ++i)
    if (!zero(m(0, i), 1.0, tol) || !zero(m(i, 0), 1.0, tol)) return false;
  if (!monomial(m, false, tol)) return false;
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j)
      if (!zero(m(i, j), 1.0, tol) && !same(T(::abs(m(i, j))), T(::abs(m(0, 0))), tol)) return false;
  return true;
}

template <>
bool pcone_automorphism<double>(const Mat<double>& m, const Tolerance& tol) {
  int n = m.rows();
  if (m(0, 0) <= 0) return false;
  for (int i = 1; i < n; ++i)
    if (!zero(m(0, i), 1.0, tol) || !zero(m(i, 0), 1.0, tol)) return false;
  if (!monomial(m, false, tol)) return false;
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j)
      if (!zero(m(i, j), 1.0, tol) && !same(std::fabs(m(i, j)), m(0, 0), tol)) return false;
  return true;
}

template <class T>
Vec<T> rotate_block(const ConeSpec& k, const Vec<T>& x, int b, const Mat<T>& t) {
  Vec<T> y = x;
  if (k.blocks[b].kind == BlockKind::PSD)
    set_block(k, y, b, psd_block(k, x, b).congruence(t).packed());
  else
    set_block(k, y, b, t * vec_block(k, x, b));
  return y;
}

// Keep the listed flat coordinates of x.
template <class T>
Vec<T> pick(const Vec<T>& x, const std::vector<int>& keep) {
  Vec<T> y;
  y.reserve(keep.size());
  for (int i : keep) y.push_back(x[i]);
  return y;
}

template <class T>
std::string vec_str(const Vec<T>& v) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << Field<T>::str(v[i]);
  os << "]";
  return os.str();
}

}  // namespace

template <class T>
std::string describe(const ElementaryOp<T>& op, const ConeSpec& k) {
  std::ostringstream os;
  bool psd = op.block >= 0 && op.block < static_cast<int>(k.blocks.size()) && k.blocks[op.block].kind == BlockKind::PSD;
  switch (op.kind) {
    case OpKind::Rotation: os << "Rotation(block " << op.block + 1 << ")"; break;
    case OpKind::Contraction:
      os << "Contraction(" << op.index + 1 << ", lambda=" << vec_str(op.lambda) << ", mu=" << vec_str(op.mu) << ")";
      break;
    case OpKind::DeleteRows: {
      bool whole = !psd && op.block < static_cast<int>(k.blocks.size()) &&
                   static_cast<int>(op.rows.size()) == k.blocks[op.block].n;
      if (whole) {
        os << "DeleteBlock(" << op.block + 1 << ")";
        break;
      }
      os << (psd ? "DeleteRowCol(" : "DeleteRows(");
      if (!psd || k.blocks.size() > 1) os << "block " << op.block + 1 << ": ";
      for (size_t i = 0; i < op.rows.size(); ++i) os << (i ? "," : "") << op.rows[i] + 1;
      os << ")";
      break;
    }
    case OpKind::DeleteMatrix: os << (k.all_of(BlockKind::PSD) ? "DeleteMatrix(" : "DeleteColumn(") << op.index + 1 << ")"; break;
  }
  return os.str();
}

template <class T>
PrimalSystem<T> apply_op(const PrimalSystem<T>& p, const ElementaryOp<T>& op, const Tolerance& tol) {
  const int m = p.m(), nb = static_cast<int>(p.k.blocks.size());
  PrimalSystem<T> q = p;
  switch (op.kind) {
    case OpKind::Rotation: {
      if (op.block < 0 || op.block >= nb) throw InvalidOp("rotation: block index out of range");
      const Block& bl = p.k.blocks[op.block];
      if (op.t.rows() != bl.n || op.t.cols() != bl.n) throw InvalidOp("rotation: wrong matrix size");
      Tolerance rt = Field<T>::exact ? Tolerance{0, 0, 0} : tol;
      if (rank_of(op.t, rt) != bl.n) throw InvalidOp("rotation: singular matrix");
      bool ok = true;
      if (bl.kind == BlockKind::SOC) ok = lorentz(op.t, tol);
      if (bl.kind == BlockKind::PCone) ok = bl.p == 2 ? lorentz(op.t, tol) : pcone_automorphism(op.t, tol);
      if (bl.kind == BlockKind::Orthant) ok = monomial(op.t, true, tol);
      if (!ok) throw InvalidOp("rotation: not an automorphism of the cone");
      for (auto& a : q.a) a = rotate_block(p.k, a, op.block, op.t);
      q.b = rotate_block(p.k, p.b, op.block, op.t);
      return q;
    }
    case OpKind::Contraction: {
      if (op.index < 0 || op.index >= m) throw InvalidOp("contraction: target index out of range");
      if (static_cast<int>(op.lambda.size()) != m || static_cast<int>(op.mu.size()) != m)
        throw InvalidOp("contraction: coefficient length");
      if (zero(op.lambda[op.index], 0.0, Field<T>::exact ? Tolerance{0, 0, 0} : tol))
        throw InvalidOp("contraction: lambda_i = 0");
      Vec<T> ai(p.k.dim(), T(0));
      for (int j = 0; j < m; ++j) {
        ai = axpy(ai, op.lambda[j], p.a[j]);
        q.b = axpy(q.b, op.mu[j], p.a[j]);
      }
      q.a[op.index] = ai;
      return q;
    }
    case OpKind::DeleteMatrix: {
      if (op.index < 0 || op.index >= m) throw InvalidOp("delete matrix: index out of range");
      q.a.erase(q.a.begin() + op.index);
      return q;
    }
    case OpKind::DeleteRows: {
      if (op.block < 0 || op.block >= nb) throw InvalidOp("delete rows: block index out of range");
      const Block& bl = p.k.blocks[op.block];
      std::vector<int> rows = op.rows;
      std::sort(rows.begin(), rows.end());
      if (rows.empty() || std::adjacent_find(rows.begin(), rows.end()) != rows.end() || rows.front() < 0 ||
          rows.back() >= bl.n)
        throw InvalidOp("delete rows: bad index set");
      bool whole = static_cast<int>(rows.size()) == bl.n;
      int off = p.k.offset(op.block);
      std::vector<int> keep;
      for (int i = 0; i < off; ++i) keep.push_back(i);
      ConeSpec nk = p.k;
      if (bl.kind == BlockKind::PSD) {
        if (whole) throw InvalidOp("delete rows: cannot delete every row of a semidefinite block");
        std::vector<int> left;
        for (int i = 0; i < bl.n; ++i)
          if (!std::binary_search(rows.begin(), rows.end(), i)) left.push_back(i);
        for (size_t a = 0; a < left.size(); ++a)
          for (size_t b = a; b < left.size(); ++b) keep.push_back(off + Sym<T>::index(bl.n, left[a], left[b]));
        nk.blocks[op.block].n = static_cast<int>(left.size());
      } else if (whole) {
        nk.blocks.erase(nk.blocks.begin() + op.block);
      } else {
        if ((bl.kind == BlockKind::SOC || bl.kind == BlockKind::PCone) && rows.front() == 0)
          throw InvalidOp("delete rows: first component of a cone block is protected");
        for (int i = 0; i < bl.n; ++i)
          if (!std::binary_search(rows.begin(), rows.end(), i)) keep.push_back(off + i);
        nk.blocks[op.block].n = bl.n - static_cast<int>(rows.size());
      }
      for (int i = off + bl.dim(); i < p.k.dim(); ++i) keep.push_back(i);
      q.k = nk;
      for (auto& a : q.a) a = pick(a, keep);
      q.b = pick(p.b, keep);
      return q;
    }
  }
  return q;
}

template <class T>
PrimalSystem<T> replay(const PrimalSystem<T>& p, const std::vector<ElementaryOp<T>>& ops, const Tolerance& tol) {
  PrimalSystem<T> q = p;
  for (const auto& op : ops) q = apply_op(q, op, tol);
  return q;
}

template <class T>
std::optional<T> is_canonical_minor(const PrimalSystem<T>& p, const Tolerance& tol) {
  if (p.m() != 1 || p.k.blocks.size() != 1) return std::nullopt;
  const Block& bl = p.k.blocks[0];
  const Vec<T>& a = p.a[0];
  const Vec<T>& b = p.b;
  double sc = std::max({1.0, max_abs(a), max_abs(b)});
  if (bl.kind == BlockKind::PSD && bl.n == 2) {
    // packed (11, 12, 22)
    if (Field<T>::sign(b[0], 0.0) <= 0 || zero(b[0], sc, tol) || !zero(b[1], sc, tol) || !zero(b[2], sc, tol))
      return std::nullopt;
    if (zero(a[1], sc, tol) || !zero(a[2], sc, tol)) return std::nullopt;
    return T(a[0] / b[0]);
  }
  bool lor = bl.kind == BlockKind::SOC || (bl.kind == BlockKind::PCone && bl.p == 2);
  if (lor && bl.n == 3) {
    if (Field<T>::sign(b[0], 0.0) <= 0 || zero(b[0], sc, tol) || !same(b[0], b[1], tol) || !zero(b[2], sc, tol))
      return std::nullopt;
    if (!same(a[0], a[1], tol) || zero(a[2], sc, tol)) return std::nullopt;
    return T(a[0] / b[0]);
  }
  return std::nullopt;
}

template <class T>
PrimalSystem<T> minor_system(const T& alpha, bool soc) {
  if (soc) return {ConeSpec{{Block::soc(3)}}, {Vec<T>{alpha, alpha, T(1)}}, Vec<T>{T(1), T(1), T(0)}};
  return {ConeSpec{{Block::psd(2)}}, {Vec<T>{alpha, T(1), T(0)}}, Vec<T>{T(1), T(0), T(0)}};
}

namespace {

template <class T>
struct Builder {
  PrimalSystem<T> cur;
  ReductionTrace<T> tr;
  Tolerance tol;
  void push(const ElementaryOp<T>& op) {
    tr.described.push_back(describe(op, cur.k));
    cur = apply_op(cur, op, tol);
    tr.ops.push_back(op);
  }
};

template <class T>
BadCert<T> presented(const PrimalSystem<T>& p, const BadCert<T>& cert, const Tolerance& tol) {
  VerifyReport rep = verify_certificate(p, cert, tol);
  if (!rep.ok) throw CertificateInvalid("certificate rejected: " + rep.failure);
  if (cert.form != NormalForm::None) return cert;
  BadCert<T> c = cert;
  Ctx ctx;
  ctx.tol = tol;
  present_bad_certificate(p, c, ctx);
  return c;
}

// B <- z, then install v - v_0 z at the lowest index with a nonzero coefficient and
// drop every other matrix. `s` rescales v (positive).
template <class T>
int contract_and_install(Builder<T>& bd, const Vec<T>& z, const Vec<T>& coords, const T& s) {
  const Tolerance& tol = bd.tol;
  int m = bd.cur.m();
  if (m == 0) throw CertificateInvalid("system has no variables");
  auto xbar = solve_in_span(bd.cur.a, sub(bd.cur.b, z), tol);
  if (!xbar) throw CertificateInvalid("normalized slack is not reachable");
  Vec<T> e0(m, T(0));
  e0[0] = T(1);
  if (!is_zero_vec(*xbar, Field<T>::exact ? 0.0 : tol.feas)) bd.push(ElementaryOp<T>::contraction(0, e0, scale(*xbar, T(-1))));
  Vec<T> lam(m);
  for (int j = 0; j < m; ++j) lam[j] = s * (coords[j] + coords[m] * (*xbar)[j]);
  int k = -1;
  double sc = std::max(1.0, max_abs(lam));
  for (int j = 0; j < m && k < 0; ++j)
    if (!zero(lam[j], sc, tol)) k = j;
  if (k < 0) throw CertificateInvalid("direction is a multiple of the slack");
  Vec<T> ek(m, T(0));
  ek[k] = T(1);
  bool ident = true;
  for (int j = 0; j < m; ++j) ident = ident && same(lam[j], ek[j], tol);
  if (!ident) bd.push(ElementaryOp<T>::contraction(k, lam, Vec<T>(m, T(0))));
  for (int j = m - 1; j >= 0; --j)
    if (j != k) bd.push(ElementaryOp<T>::delete_matrix(j));
  return k;
}

template <class T>
void finish(Builder<T>& bd) {
  bd.tr.terminal = bd.cur;
  auto a = is_canonical_minor(bd.cur, bd.tol);
  if (!a) throw CertificateInvalid("reduction did not reach the minor shape");
  bd.tr.alpha = *a;
  bool soc = bd.cur.k.blocks[0].kind != BlockKind::PSD;
  const Vec<T>& av = bd.cur.a[0];
  const Vec<T>& b = bd.cur.b;
  bd.tr.canonical = same(b[0], T(1), bd.tol) && same(soc ? av[2] : av[1], T(1), bd.tol);
}

}  // namespace

template <class T>
ReductionTrace<T> reduce_sdp(const PrimalSystem<T>& p, const BadCert<T>& cert0, const Tolerance& tol) {
  if (p.k.blocks.size() != 1 || p.k.blocks[0].kind != BlockKind::PSD)
    throw Unsupported("reduce_sdp needs a single PSD block");
  BadCert<T> cert = presented(p, cert0, tol);
  if (cert.form != NormalForm::Vform && cert.form != NormalForm::ScaledVform)
    throw CertificateInvalid("certificate has no semidefinite normal form");
  int n = p.k.blocks[0].n;
  Builder<T> bd{p, {}, tol};
  Mat<T> t = Mat<T>::identity(n);
  for (const auto& st : cert.log.steps) t = t * st.t;
  if (!is_identity(t, tol)) bd.push(ElementaryOp<T>::rotation(0, t));
  contract_and_install(bd, cert.z_normal, cert.coords, T(1));
  Sym<T> zn = psd_block(p.k, cert.z_normal, 0);
  Tolerance rt = Field<T>::exact ? Tolerance{0, 0, 0} : tol;
  int r = rank_of(zn, rt);
  Sym<T> v = psd_block(bd.cur.k, bd.cur.a[0], 0);
  double sc = std::max(1.0, max_abs(v.packed()));
  int i = -1;
  for (int row = 0; row < r && i < 0; ++row)
    if (!zero(v(row, r), sc, tol)) i = row;
  if (i < 0) throw CertificateInvalid("frontier column vanishes after installation");
  for (int row = n - 1; row >= 0; --row)
    if (row != i && row != r) bd.push(ElementaryOp<T>::delete_rows(0, {row}));
  // Now x1 [[a, c], [c, 0]] <= diag(d, 0): scale c to 1, and d to 1 when sqrt(d) exists.
  T d = bd.cur.b[0], c = bd.cur.a[0][1];
  Mat<T> fix = Mat<T>::identity(2);
  auto sd = Field<T>::sqrt(d);
  if (sd && !same(d, T(1), tol)) {
    fix(0, 0) = T(T(1) / *sd);
    fix(1, 1) = T(*sd / c);
  } else {
    fix(1, 1) = T(T(1) / c);
  }
  if (!is_identity(fix, tol)) bd.push(ElementaryOp<T>::rotation(0, fix));
  finish(bd);
  return bd.tr;
}

template <class T>
ReductionTrace<T> reduce_socp(const PrimalSystem<T>& p, const BadCert<T>& cert0, const Tolerance& tol) {
  if (!p.k.all_of(BlockKind::SOC)) throw Unsupported("reduce_socp needs second order cone blocks");
  BadCert<T> cert = presented(p, cert0, tol);
  if (cert.form != NormalForm::SocForm) throw CertificateInvalid("certificate has no second order cone normal form");
  Builder<T> bd{p, {}, tol};
  T s(1);
  for (const auto& st : cert.log.steps) {
    if (st.kind == TransformKind::SocRotation && !is_identity(st.t, tol))
      bd.push(ElementaryOp<T>::rotation(st.block, st.t));
    if (st.kind == TransformKind::Scaling) s = s * st.t(0, 0);
  }
  contract_and_install(bd, cert.z_normal, cert.coords, s);
  int j = cert.block;
  for (int b = static_cast<int>(bd.cur.k.blocks.size()) - 1; b >= 0; --b) {
    if (b == j) continue;
    std::vector<int> all(bd.cur.k.blocks[b].n);
    for (int i = 0; i < static_cast<int>(all.size()); ++i) all[i] = i;
    bd.push(ElementaryOp<T>::delete_rows(b, all));
    if (b < j) --j;
  }
  int mj = bd.cur.k.blocks[0].n;
  if (mj > 3) {
    std::vector<int> tail;
    for (int i = 3; i < mj; ++i) tail.push_back(i);
    bd.push(ElementaryOp<T>::delete_rows(0, tail));
  }
  finish(bd);
  return bd.tr;
}

template <class T>
ReductionTrace<T> reduce(const PrimalSystem<T>& p, const BadCert<T>& cert, const Tolerance& tol) {
  if (p.k.blocks.size() == 1 && p.k.blocks[0].kind == BlockKind::PSD) return reduce_sdp(p, cert, tol);
  if (p.k.all_of(BlockKind::SOC)) return reduce_socp(p, cert, tol);
  throw Unsupported("reduction is defined for a single PSD block or second order cone blocks");
}

#define CONICD_INST(T)                                                                                           \
  template std::string describe(const ElementaryOp<T>&, const ConeSpec&);                                        \
  template PrimalSystem<T> apply_op(const PrimalSystem<T>&, const ElementaryOp<T>&, const Tolerance&);           \
  template PrimalSystem<T> replay(const PrimalSystem<T>&, const std::vector<ElementaryOp<T>>&, const Tolerance&); \
  template std::optional<T> is_canonical_minor(const PrimalSystem<T>&, const Tolerance&);                       \
  template PrimalSystem<T> minor_system(const T&, bool);                                                         \
  template ReductionTrace<T> reduce_sdp(const PrimalSystem<T>&, const BadCert<T>&, const Tolerance&);           \
  template ReductionTrace<T> reduce_socp(const PrimalSystem<T>&, const BadCert<T>&, const Tolerance&);          \
  template ReductionTrace<T> reduce(const PrimalSystem<T>&, const BadCert<T>&, const Tolerance&);
CONICD_INST(double)
CONICD_INST(Rational)
#undef CONICD_INST

}  // namespace conicd
