#include "conicd/cones.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace conicd {

int ConeSpec::dim() const {
  int d = 0;
  for (const auto& b : blocks) d += b.dim();
  return d;
}

int ConeSpec::offset(int b) const {
  int d = 0;
  for (int i = 0; i < b; ++i) d += blocks[i].dim();
  return d;
}

ConeSpec ConeSpec::dual() const {
  ConeSpec d = *this;
  for (auto& b : d.blocks)
    if (b.kind == BlockKind::PCone) b.p = b.p / (b.p - 1);
  return d;
}

bool ConeSpec::all_of(BlockKind k) const {
  return std::all_of(blocks.begin(), blocks.end(), [k](const Block& b) { return b.kind == k; });
}

std::string ConeSpec::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (i) os << ' ';
    switch (b.kind) {
      case BlockKind::PSD: os << "PSD " << b.n; break;
      case BlockKind::SOC: os << "SOC " << b.n; break;
      case BlockKind::PCone: os << "PCONE " << b.n << ' ' << Field<Rational>::str(b.p); break;
      case BlockKind::Orthant: os << "ORTH " << b.n; break;
    }
  }
  return os.str();
}

void validate(const ConeSpec& k) {
  for (const auto& b : k.blocks) {
    if (b.n < 1 && b.kind != BlockKind::PSD) throw std::invalid_argument("cone block of size < 1");
    if (b.n < 0) throw std::invalid_argument("negative PSD order");
    if (b.kind == BlockKind::PCone && b.p <= 1) throw std::invalid_argument("p-cone exponent must exceed 1");
  }
}

Vec<int> pairing_weights(const ConeSpec& k) {
  Vec<int> w;
  w.reserve(k.dim());
  for (const auto& b : k.blocks) {
    if (b.kind == BlockKind::PSD) {
      for (int i = 0; i < b.n; ++i)
        for (int j = i; j < b.n; ++j) w.push_back(i == j ? 1 : 2);
    } else {
      for (int i = 0; i < b.n; ++i) w.push_back(1);
    }
  }
  return w;
}

template <class T>
T pair(const ConeSpec& k, const Vec<T>& x, const Vec<T>& y) {
  if (static_cast<int>(x.size()) != k.dim() || static_cast<int>(y.size()) != k.dim())
    throw DimensionMismatch("pair: point does not match the cone");
  Vec<int> w = pairing_weights(k);
  T s(0);
  for (size_t i = 0; i < x.size(); ++i) {
    if (w[i] == 1)
      s += x[i] * y[i];
    else
      s += T(2) * x[i] * y[i];
  }
  return s;
}

template <class T>
Sym<T> psd_block(const ConeSpec& k, const Vec<T>& x, int b) {
  int off = k.offset(b), n = k.blocks[b].n;
  return Sym<T>(n, Vec<T>(x.begin() + off, x.begin() + off + Sym<T>::packed_size(n)));
}

template <class T>
Vec<T> vec_block(const ConeSpec& k, const Vec<T>& x, int b) {
  int off = k.offset(b);
  return Vec<T>(x.begin() + off, x.begin() + off + k.blocks[b].dim());
}

template <class T>
void set_block(const ConeSpec& k, Vec<T>& x, int b, const Vec<T>& values) {
  int off = k.offset(b);
  std::copy(values.begin(), values.end(), x.begin() + off);
}

template <class T>
Vec<T> unit_point(const ConeSpec& k) {
  Vec<T> u(k.dim(), T(0));
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    int off = k.offset(int(b));
    switch (bl.kind) {
      case BlockKind::PSD:
        for (int i = 0; i < bl.n; ++i) u[off + Sym<T>::index(bl.n, i, i)] = T(1);
        break;
      case BlockKind::SOC:
      case BlockKind::PCone: u[off] = T(1); break;
      case BlockKind::Orthant:
        for (int i = 0; i < bl.n; ++i) u[off + i] = T(1);
        break;
    }
  }
  return u;
}

bool pcone_exact(const Rational& p, int nonzeros) { return nonzeros <= 1 || p.get_den() == 1; }

namespace {

Rational qpow(const Rational& x, unsigned long e) {
  Rational r;
  mpz_class n, d;
  mpz_pow_ui(n.get_mpz_t(), x.get_num_mpz_t(), e);
  mpz_pow_ui(d.get_mpz_t(), x.get_den_mpz_t(), e);
  r = Rational(n, d);
  r.canonicalize();
  return r;
}

double pnorm(const Vec<double>& x, size_t from, double p) {
  double mx = 0;
  for (size_t i = from; i < x.size(); ++i) mx = std::max(mx, std::fabs(x[i]));
  if (mx == 0) return 0;
  double s = 0;
  for (size_t i = from; i < x.size(); ++i) s += std::pow(std::fabs(x[i]) / mx, p);
  return mx * std::pow(s, 1.0 / p);
}

template <class T>
int tail_nonzeros(const Vec<T>& x) {
  int c = 0;
  for (size_t i = 1; i < x.size(); ++i)
    if (!Field<T>::is_zero(x[i], 0.0)) ++c;
  return c;
}

double vscale(const Vec<double>& x) { return std::max(1.0, max_abs(x)); }

// Second-order / p-cone membership of one vector block.
template <class T>
bool ray_member(const Vec<T>& x, BlockKind kind, const Rational& p, bool strict, const Tolerance& tol, Caveats* cav) {
  if constexpr (Field<T>::exact) {
    if (kind == BlockKind::SOC || (kind == BlockKind::PCone && p == 2)) {
      Rational s = 0;
      for (size_t i = 1; i < x.size(); ++i) s += x[i] * x[i];
      Rational x1sq = x[0] * x[0];
      if (strict) return sgn(x[0]) > 0 && x1sq > s;
      return sgn(x[0]) >= 0 && x1sq >= s;
    }
    int nz = tail_nonzeros(x);
    if (nz <= 1) {
      Rational m = 0;
      for (size_t i = 1; i < x.size(); ++i) m = std::max(m, Rational(::abs(x[i])));
      return strict ? x[0] > m : x[0] >= m;
    }
    if (p.get_den() == 1) {
      unsigned long e = p.get_num().get_ui();
      Rational s = 0;
      for (size_t i = 1; i < x.size(); ++i) s += qpow(::abs(x[i]), e);
      Rational lhs = qpow(x[0], e);
      if (strict) return sgn(x[0]) > 0 && lhs > s;
      return sgn(x[0]) >= 0 && lhs >= s;
    }
    if (cav) cav->add(caveat::kPConeFloat);
    Vec<double> xd = convert_vec<Rational, double>(x);
    double gap = xd[0] - pnorm(xd, 1, p.get_d());
    double sc = vscale(xd);
    return strict ? gap > tol.feas * sc : gap >= -tol.feas * sc;
  } else {
    double pn = kind == BlockKind::SOC ? pnorm(x, 1, 2.0) : pnorm(x, 1, p.get_d());
    double gap = x[0] - pn;
    double sc = vscale(x);
    return strict ? gap > tol.feas * sc : gap >= -tol.feas * sc;
  }
}

}  // namespace

template <class T>
bool member(const ConeSpec& k, const Vec<T>& x, bool strict, const Tolerance& tol, Caveats* cav) {
  if (static_cast<int>(x.size()) != k.dim()) throw DimensionMismatch("member: point does not match the cone");
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    switch (bl.kind) {
      case BlockKind::PSD: {
        Sym<T> s = psd_block(k, x, int(b));
        if (!(strict ? is_pd(s, tol) : is_psd(s, tol))) return false;
        break;
      }
      case BlockKind::SOC:
      case BlockKind::PCone:
        if (!ray_member(vec_block(k, x, int(b)), bl.kind, bl.p, strict, tol, cav)) return false;
        break;
      case BlockKind::Orthant: {
        Vec<T> v = vec_block(k, x, int(b));
        for (const auto& e : v) {
          if constexpr (Field<T>::exact) {
            if (strict ? sgn(e) <= 0 : sgn(e) < 0) return false;
          } else {
            double sc = vscale(x);
            if (strict ? e <= tol.feas * sc : e < -tol.feas * sc) return false;
          }
        }
        break;
      }
    }
  }
  return true;
}

double margin(const ConeSpec& k, const Vec<double>& x) {
  double m = std::numeric_limits<double>::infinity();
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    switch (bl.kind) {
      case BlockKind::PSD:
        if (bl.n > 0) m = std::min(m, min_eig(psd_block(k, x, int(b))));
        break;
      case BlockKind::SOC: {
        Vec<double> v = vec_block(k, x, int(b));
        m = std::min(m, v[0] - pnorm(v, 1, 2.0));
        break;
      }
      case BlockKind::PCone: {
        Vec<double> v = vec_block(k, x, int(b));
        m = std::min(m, v[0] - pnorm(v, 1, bl.p.get_d()));
        break;
      }
      case BlockKind::Orthant:
        for (double e : vec_block(k, x, int(b))) m = std::min(m, e);
        break;
    }
  }
  return m;
}

const char* dirset_name(DirSet d) {
  switch (d) {
    case DirSet::Dir: return "dir";
    case DirSet::ClDir: return "cldir";
    case DirSet::LDir: return "ldir";
    case DirSet::Tan: return "tan";
  }
  return "?";
}

namespace {

template <class T>
Mat<T> basis_matrix(int n, const Subspace<T>& s) {
  Mat<T> m(n, s.dim());
  for (int j = 0; j < s.dim(); ++j)
    for (int i = 0; i < n; ++i) m(i, j) = s.basis[j][i];
  return m;
}

template <class T>
BlockFace<T> psd_face_from_range(int n, const Subspace<T>& range, const Tolerance& tol) {
  BlockFace<T> f;
  f.kind = BlockKind::PSD;
  f.rank = range.dim();
  f.range = basis_matrix(n, range);
  f.null = basis_matrix(n, orth_complement(range, tol));
  return f;
}

// Float decisions on PSD spectra: eigenvalues above rel * lambda_max count
// as nonzero.
double float_rank_threshold(const Vec<double>& ev, const Tolerance& tol, double rel) {
  double top = 0;
  for (double e : ev) top = std::max(top, std::fabs(e));
  return std::max(rel * top, tol.feas * 1e-3);
}

template <class T>
BlockFace<T> psd_minimal_face(const Sym<T>& x, const Tolerance& tol, Caveats* cav) {
  int n = x.n();
  if constexpr (Field<T>::exact) {
    return psd_face_from_range(n, span(n, x.to_mat().columns(), tol), tol);
  } else {
    BlockFace<T> f;
    f.kind = BlockKind::PSD;
    if (n == 0) return f;
    EigenDecomp e = eigh(x, tol);
    double thr = float_rank_threshold(e.values, tol, tol.rank);
    std::vector<int> big, small;
    for (int k = 0; k < n; ++k) {
      (e.values[k] > thr ? big : small).push_back(k);
      double rel = std::fabs(e.values[k]) / std::max(thr / tol.rank, 1e-300);
      if (cav && e.values[k] != 0 && rel > tol.rank * 1e-2 && rel < tol.rank * 1e2) cav->add(caveat::kBorderline);
    }
    f.rank = static_cast<int>(big.size());
    f.range = e.vectors.select_cols(big);
    f.null = e.vectors.select_cols(small);
    return f;
  }
}

template <class T>
bool vec_is_zero(const Vec<T>& v, const Tolerance& tol) {
  if constexpr (Field<T>::exact) {
    return is_zero_vec(v, 0.0);
  } else {
    return max_abs(v) <= tol.feas;
  }
}

template <class T>
Vec<T> normalized_ray(const Vec<T>& x) {
  Vec<T> g = x;
  T inv = T(1) / x[0];
  for (auto& e : g) e *= inv;
  g[0] = T(1);
  return g;
}

template <class T>
bool same_vec(const Vec<T>& a, const Vec<T>& b, const Tolerance& tol) {
  if (a.size() != b.size()) return false;
  if constexpr (Field<T>::exact) {
    return a == b;
  } else {
    return max_abs(sub(a, b)) <= tol.feas * 1e2 * std::max(1.0, max_abs(a));
  }
}

}  // namespace

template <class T>
FaceDescriptor<T> minimal_face(const ConeSpec& k, const Vec<T>& x, const Tolerance& tol, Caveats* cav) {
  if (!member(k, x, false, tol, cav)) throw std::domain_error("minimal_face: point is not in the cone");
  FaceDescriptor<T> f;
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    BlockFace<T> bf;
    bf.kind = bl.kind;
    switch (bl.kind) {
      case BlockKind::PSD: bf = psd_minimal_face(psd_block(k, x, int(b)), tol, cav); break;
      case BlockKind::SOC:
      case BlockKind::PCone: {
        Vec<T> v = vec_block(k, x, int(b));
        if (vec_is_zero(v, tol))
          bf.tag = RayTag::Zero;
        else if (ray_member(v, bl.kind, bl.p, true, tol, cav))
          bf.tag = RayTag::Full;
        else {
          bf.tag = RayTag::Ray;
          bf.gen = normalized_ray(v);
        }
        break;
      }
      case BlockKind::Orthant: {
        Vec<T> v = vec_block(k, x, int(b));
        for (int i = 0; i < bl.n; ++i) {
          bool pos;
          if constexpr (Field<T>::exact)
            pos = sgn(v[i]) > 0;
          else
            pos = v[i] > tol.feas * vscale(x);
          if (pos) bf.support.push_back(i);
        }
        break;
      }
    }
    f.blocks.push_back(bf);
  }
  return f;
}

template <class T>
Vec<T> pcone_conjugate(const Vec<T>& gen, const Rational& p, Caveats* cav) {
  Vec<T> c(gen.size(), T(0));
  c[0] = T(1);
  int nz = tail_nonzeros(gen);
  if constexpr (Field<T>::exact) {
    if (p == 2 || nz <= 1 || p.get_den() == 1) {
      unsigned long e = p.get_den() == 1 ? (p.get_num().get_ui() - 1) : 1;
      for (size_t i = 1; i < gen.size(); ++i) {
        if (sgn(gen[i]) == 0) continue;
        if (nz <= 1 && p.get_den() != 1) {
          c[i] = -Rational(sgn(gen[i]));
        } else {
          Rational a = qpow(::abs(gen[i]), e);
          c[i] = sgn(gen[i]) > 0 ? Rational(-a) : a;
        }
      }
      return c;
    }
    if (cav) cav->add(caveat::kPConeFloat);
  }
  double pd = p.get_d();
  for (size_t i = 1; i < gen.size(); ++i) {
    double g = Field<T>::to_double(gen[i]);
    if (g == 0) continue;
    double a = std::pow(std::fabs(g), pd - 1);
    c[i] = Field<T>::from_double(g > 0 ? -a : a);
  }
  return c;
}

template <class T>
FaceDescriptor<T> conjugate_face(const ConeSpec& k, const FaceDescriptor<T>& f, const Tolerance&, Caveats* cav) {
  if (f.blocks.size() != k.blocks.size()) throw std::invalid_argument("conjugate_face: face does not match the cone");
  FaceDescriptor<T> g;
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    const BlockFace<T>& bf = f.blocks[b];
    BlockFace<T> c;
    c.kind = bl.kind;
    switch (bl.kind) {
      case BlockKind::PSD:
        c.rank = bl.n - bf.rank;
        c.range = bf.null;
        c.null = bf.range;
        break;
      case BlockKind::SOC:
      case BlockKind::PCone:
        if (bf.tag == RayTag::Zero)
          c.tag = RayTag::Full;
        else if (bf.tag == RayTag::Full)
          c.tag = RayTag::Zero;
        else {
          c.tag = RayTag::Ray;
          c.gen = bl.kind == BlockKind::SOC ? pcone_conjugate(bf.gen, Rational(2), cav) : pcone_conjugate(bf.gen, bl.p, cav);
        }
        break;
      case BlockKind::Orthant:
        for (int i = 0, s = 0; i < bl.n; ++i) {
          if (s < static_cast<int>(bf.support.size()) && bf.support[s] == i)
            ++s;
          else
            c.support.push_back(i);
        }
        break;
    }
    g.blocks.push_back(c);
  }
  return g;
}

template <class T>
FaceDescriptor<T> exposed_face(const ConeSpec& k, const Vec<T>& u, const Tolerance& tol, Caveats* cav) {
  if (static_cast<int>(u.size()) != k.dim()) throw DimensionMismatch("exposed_face: point does not match the cone");
  ConeSpec kd = k.dual();
  FaceDescriptor<T> f;
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    BlockFace<T> bf;
    bf.kind = bl.kind;
    switch (bl.kind) {
      case BlockKind::PSD: {
        Sym<T> us = psd_block(kd, u, int(b));
        int n = bl.n;
        if constexpr (Field<T>::exact) {
          bf = psd_face_from_range(n, nullspace(us.to_mat(), tol), tol);
        } else {
          bf.kind = BlockKind::PSD;
          if (n == 0) break;
          EigenDecomp e = eigh(us, tol);
          double thr = float_rank_threshold(e.values, tol, tol.rank * 1e3);
          std::vector<int> zero, pos;
          for (int i = 0; i < n; ++i) (e.values[i] > thr ? pos : zero).push_back(i);
          bf.rank = static_cast<int>(zero.size());
          bf.range = e.vectors.select_cols(zero);
          bf.null = e.vectors.select_cols(pos);
        }
        break;
      }
      case BlockKind::SOC:
      case BlockKind::PCone: {
        Vec<T> v = vec_block(kd, u, int(b));
        Rational q = kd.blocks[b].p;
        if (vec_is_zero(v, tol))
          bf.tag = RayTag::Full;
        else if (ray_member(v, bl.kind, q, true, tol, cav))
          bf.tag = RayTag::Zero;
        else {
          bf.tag = RayTag::Ray;
          bf.gen = pcone_conjugate(normalized_ray(v), bl.kind == BlockKind::SOC ? Rational(2) : q, cav);
        }
        break;
      }
      case BlockKind::Orthant: {
        Vec<T> v = vec_block(kd, u, int(b));
        for (int i = 0; i < bl.n; ++i) {
          bool zero;
          if constexpr (Field<T>::exact)
            zero = sgn(v[i]) == 0;
          else
            zero = std::fabs(v[i]) <= tol.rank * 1e3 * std::max(max_abs(v), 1e-300);
          if (zero) bf.support.push_back(i);
        }
        break;
      }
    }
    f.blocks.push_back(bf);
  }
  return f;
}

template <class T>
bool face_contains(const ConeSpec& k, const FaceDescriptor<T>& big, const FaceDescriptor<T>& small, const Tolerance& tol) {
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const BlockFace<T>& B = big.blocks[b];
    const BlockFace<T>& S = small.blocks[b];
    switch (k.blocks[b].kind) {
      case BlockKind::PSD:
        if (S.rank > B.rank) return false;
        if (S.rank > 0 && !range_included(S.range, B.range, tol)) return false;
        break;
      case BlockKind::SOC:
      case BlockKind::PCone:
        if (S.tag == RayTag::Zero || B.tag == RayTag::Full) break;
        if (S.tag == RayTag::Full || B.tag == RayTag::Zero) return false;
        if (!same_vec(S.gen, B.gen, tol)) return false;
        break;
      case BlockKind::Orthant:
        if (!std::includes(B.support.begin(), B.support.end(), S.support.begin(), S.support.end())) return false;
        break;
    }
  }
  return true;
}

template <class T>
bool face_equal(const ConeSpec& k, const FaceDescriptor<T>& a, const FaceDescriptor<T>& b, const Tolerance& tol) {
  return face_contains(k, a, b, tol) && face_contains(k, b, a, tol);
}

namespace {

template <class T>
bool zero_mat(const Mat<T>& m, double thr) {
  if constexpr (Field<T>::exact) {
    return is_zero_vec(m.data(), 0.0);
  } else {
    return max_abs(m) <= thr;
  }
}

template <class T>
bool psd_dirset(const Sym<T>& v, const BlockFace<T>& f, DirSet which, const Tolerance& tol, Caveats* cav) {
  int n = v.n();
  if (n == 0) return true;
  double s = Field<T>::exact ? 0.0 : std::max(max_abs(v.packed()), 1e-300);
  double thr = tol.feas * s;
  Mat<T> vm = v.to_mat();
  Mat<T> vn = vm * f.null;
  if (which == DirSet::LDir) return zero_mat(vn, thr);
  Sym<T> y22 = Sym<T>::from_mat(f.null.transpose() * vn);
  if (which == DirSet::Tan) return zero_mat(y22.to_mat(), thr);
  bool cl;
  if constexpr (Field<T>::exact) {
    cl = is_psd(y22, tol);
  } else {
    if (y22.n() == 0) {
      cl = true;
    } else {
      EigenDecomp e = eigh(y22, tol);
      cl = e.values.back() >= -thr;
      if (cav)
        for (double ev : e.values)
          if (std::fabs(ev) > thr * 1e-3 && std::fabs(ev) < thr * 1e3) cav->add(caveat::kBorderline);
    }
  }
  if (which == DirSet::ClDir || !cl) return cl;
  Mat<T> y12 = f.range.transpose() * vn;
  if constexpr (Field<T>::exact) {
    return range_included(y12.transpose(), y22.to_mat(), tol);
  } else {
    // Project onto the eigenvectors of Y22 whose eigenvalues clear the threshold.
    if (y12.rows() == 0 || y22.n() == 0) return true;
    EigenDecomp e = eigh(y22, tol);
    std::vector<int> big;
    for (int i = 0; i < y22.n(); ++i)
      if (e.values[i] > thr) big.push_back(i);
    Mat<double> qb = e.vectors.select_cols(big);
    Mat<double> yt = y12.transpose();
    Mat<double> res = yt - qb * (qb.transpose() * yt);
    double r = max_abs(res);
    if (cav && r > thr && r < thr * 1e4) cav->add(caveat::kBorderline);
    return r <= thr * 10;
  }
}

template <class T>
bool ray_dirset(const Vec<T>& v, const BlockFace<T>& f, const Block& bl, DirSet which, const Tolerance& tol,
                Caveats* cav) {
  double s = Field<T>::exact ? 0.0 : std::max(max_abs(v), 1e-300);
  double thr = tol.feas * s;
  if (f.tag == RayTag::Full) return true;
  if (f.tag == RayTag::Zero) {
    if (which == DirSet::Tan || which == DirSet::LDir) return vec_is_zero(v, Tolerance{tol.rank, thr, tol.eig});
    return ray_member(v, bl.kind, bl.p, false, tol, cav);
  }
  Vec<T> rest = axpy(v, T(-v[0]), f.gen);
  bool ldir;
  if constexpr (Field<T>::exact)
    ldir = is_zero_vec(rest, 0.0);
  else
    ldir = max_abs(rest) <= thr;
  if (which == DirSet::LDir) return ldir;
  Vec<T> conj = pcone_conjugate(f.gen, bl.kind == BlockKind::SOC ? Rational(2) : bl.p, cav);
  T t = dot(v, conj);
  int st = Field<T>::sign(t, thr);
  switch (which) {
    case DirSet::ClDir: return st >= 0;
    case DirSet::Tan: return st == 0;
    case DirSet::Dir:
      if (st > 0 || ldir) return true;
      if (st < 0) return false;
      if (bl.kind == BlockKind::PCone) {
        ConeSpec one{{bl}};
        return eps_step_dir(one, f.gen, v);
      }
      return false;
    default: return false;
  }
}

template <class T>
bool orthant_dirset(const Vec<T>& v, const BlockFace<T>& f, DirSet which, const Tolerance& tol) {
  double s = Field<T>::exact ? 0.0 : std::max(max_abs(v), 1e-300);
  double thr = tol.feas * s;
  size_t si = 0;
  for (int i = 0; i < static_cast<int>(v.size()); ++i) {
    if (si < f.support.size() && f.support[si] == i) {
      ++si;
      continue;
    }
    int sg = Field<T>::sign(v[i], thr);
    if ((which == DirSet::Dir || which == DirSet::ClDir) ? sg < 0 : sg != 0) return false;
  }
  return true;
}

template <class T>
bool block_dirset(const ConeSpec& k, const FaceDescriptor<T>& f, const Vec<T>& v, int b, DirSet which,
                  const Tolerance& tol, Caveats* cav) {
  const Block& bl = k.blocks[b];
  switch (bl.kind) {
    case BlockKind::PSD: return psd_dirset(psd_block(k, v, b), f.blocks[b], which, tol, cav);
    case BlockKind::SOC:
    case BlockKind::PCone: return ray_dirset(vec_block(k, v, b), f.blocks[b], bl, which, tol, cav);
    case BlockKind::Orthant: return orthant_dirset(vec_block(k, v, b), f.blocks[b], which, tol);
  }
  return false;
}

}  // namespace

template <class T>
bool in_dirset(const ConeSpec& k, const FaceDescriptor<T>& f, const Vec<T>& v, DirSet which, const Tolerance& tol,
               Caveats* cav) {
  if (static_cast<int>(v.size()) != k.dim()) throw DimensionMismatch("in_dirset: direction does not match the cone");
  if (f.blocks.size() != k.blocks.size()) throw std::invalid_argument("in_dirset: face does not match the cone");
  for (size_t b = 0; b < k.blocks.size(); ++b)
    if (!block_dirset(k, f, v, int(b), which, tol, cav)) return false;
  return true;
}

template <class T>
int frontier_block(const ConeSpec& k, const FaceDescriptor<T>& f, const Vec<T>& v, const Tolerance& tol, Caveats* cav) {
  if (!in_dirset(k, f, v, DirSet::ClDir, tol, cav)) return -1;
  for (size_t b = 0; b < k.blocks.size(); ++b)
    if (!block_dirset(k, f, v, int(b), DirSet::Dir, tol, cav)) return int(b);
  return -1;
}

template <class T>
bool frontier_member(const ConeSpec& k, const FaceDescriptor<T>& f, const Vec<T>& v, const Tolerance& tol, Caveats* cav) {
  return frontier_block(k, f, v, tol, cav) >= 0;
}

template <class T>
bool strictly_complementary(const ConeSpec& k, const Vec<T>& u, const Vec<T>& x, const Tolerance& tol, Caveats* cav) {
  ConeSpec kd = k.dual();
  auto fu = minimal_face(kd, u, tol, cav);
  auto fx = conjugate_face(k, minimal_face(k, x, tol, cav), tol, cav);
  return face_equal(kd, fu, fx, tol);
}

template <class T>
bool in_face_span(const ConeSpec& k, const FaceDescriptor<T>& f, const Vec<T>& v, const Tolerance& tol) {
  return in_dirset(k, f, v, DirSet::LDir, tol);
}

template <class T>
bool eps_step_dir(const ConeSpec& k, const Vec<T>& x, const Vec<T>& v) {
  Vec<Rational> xq = convert_vec<T, Rational>(x), vq = convert_vec<T, Rational>(v);
  Tolerance exact{0.0, 0.0, 0.0};
  Rational eps(1, 10);
  for (int i = 0; i < 6; ++i, eps /= 10)
    if (member(k, axpy(xq, eps, vq), false, exact)) return true;
  return false;
}

template <class T>
FaceEmbedding<T> embed_face(const ConeSpec& k, const FaceDescriptor<T>& f) {
  FaceEmbedding<T> e;
  std::vector<Vec<T>> cols;
  int d = k.dim();
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    const BlockFace<T>& bf = f.blocks[b];
    int off = k.offset(int(b));
    auto push_unit = [&](int idx) {
      Vec<T> c(d, T(0));
      c[off + idx] = T(1);
      cols.push_back(c);
    };
    switch (bl.kind) {
      case BlockKind::PSD: {
        int r = bf.rank;
        if (r == 0) break;
        e.reduced.blocks.push_back(Block::psd(r));
        e.origin.push_back(int(b));
        for (int a = 0; a < r; ++a)
          for (int c = a; c < r; ++c) {
            // Q E_ac Q^T with E_ac the symmetric unit matrix of the packed entry.
            Vec<T> col(d, T(0));
            for (int i = 0; i < bl.n; ++i)
              for (int j = i; j < bl.n; ++j) {
                T val = bf.range(i, a) * bf.range(j, c);
                if (a != c) val += bf.range(i, c) * bf.range(j, a);
                col[off + Sym<T>::index(bl.n, i, j)] = val;
              }
            cols.push_back(col);
          }
        break;
      }
      case BlockKind::SOC:
      case BlockKind::PCone:
        if (bf.tag == RayTag::Zero) break;
        e.origin.push_back(int(b));
        if (bf.tag == RayTag::Full) {
          e.reduced.blocks.push_back(bl);
          for (int i = 0; i < bl.n; ++i) push_unit(i);
        } else {
          e.reduced.blocks.push_back(Block::orthant(1));
          Vec<T> c(d, T(0));
          for (int i = 0; i < bl.n; ++i) c[off + i] = bf.gen[i];
          cols.push_back(c);
        }
        break;
      case BlockKind::Orthant:
        if (bf.support.empty()) break;
        e.origin.push_back(int(b));
        e.reduced.blocks.push_back(Block::orthant(static_cast<int>(bf.support.size())));
        for (int i : bf.support) push_unit(i);
        break;
    }
  }
  e.map = Mat<T>(d, static_cast<int>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) e.map.set_col(int(j), cols[j]);
  return e;
}

template <class T>
std::vector<Vec<T>> tangent_equations(const ConeSpec& k, const FaceDescriptor<T>& f, int b) {
  std::vector<Vec<T>> rows;
  const Block& bl = k.blocks[b];
  const BlockFace<T>& bf = f.blocks[b];
  int off = k.offset(b), d = k.dim();
  switch (bl.kind) {
    case BlockKind::PSD: {
      const Mat<T>& N = bf.null;
      int q = N.cols();
      for (int a = 0; a < q; ++a)
        for (int c = a; c < q; ++c) {
          Vec<T> row(d, T(0));
          for (int i = 0; i < bl.n; ++i)
            for (int j = i; j < bl.n; ++j) {
              T v = N(i, a) * N(j, c);
              if (i != j) v += N(j, a) * N(i, c);
              row[off + Sym<T>::index(bl.n, i, j)] = v;
            }
          rows.push_back(row);
        }
      break;
    }
    case BlockKind::SOC:
    case BlockKind::PCone:
      if (bf.tag == RayTag::Zero) {
        for (int i = 0; i < bl.n; ++i) {
          Vec<T> row(d, T(0));
          row[off + i] = T(1);
          rows.push_back(row);
        }
      } else if (bf.tag == RayTag::Ray) {
        Vec<T> conj = pcone_conjugate(bf.gen, bl.kind == BlockKind::SOC ? Rational(2) : bl.p);
        Vec<T> row(d, T(0));
        for (int i = 0; i < bl.n; ++i) row[off + i] = conj[i];
        rows.push_back(row);
      }
      break;
    case BlockKind::Orthant:
      for (int i = 0; i < bl.n; ++i) {
        if (std::find(bf.support.begin(), bf.support.end(), i) != bf.support.end()) continue;
        Vec<T> row(d, T(0));
        row[off + i] = T(1);
        rows.push_back(row);
      }
      break;
  }
  return rows;
}

template <class T>
std::vector<Vec<T>> tangent_equations(const ConeSpec& k, const FaceDescriptor<T>& f) {
  std::vector<Vec<T>> rows;
  for (int b = 0; b < static_cast<int>(k.blocks.size()); ++b) {
    auto r = tangent_equations(k, f, b);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

#define CONICD_INST(T)                                                                                            \
  template T pair(const ConeSpec&, const Vec<T>&, const Vec<T>&);                                                 \
  template Sym<T> psd_block(const ConeSpec&, const Vec<T>&, int);                                                 \
  template Vec<T> vec_block(const ConeSpec&, const Vec<T>&, int);                                                 \
  template void set_block(const ConeSpec&, Vec<T>&, int, const Vec<T>&);                                          \
  template Vec<T> unit_point(const ConeSpec&);                                                                    \
  template bool member(const ConeSpec&, const Vec<T>&, bool, const Tolerance&, Caveats*);                         \
  template FaceDescriptor<T> minimal_face(const ConeSpec&, const Vec<T>&, const Tolerance&, Caveats*);            \
  template FaceDescriptor<T> conjugate_face(const ConeSpec&, const FaceDescriptor<T>&, const Tolerance&, Caveats*); \
  template FaceDescriptor<T> exposed_face(const ConeSpec&, const Vec<T>&, const Tolerance&, Caveats*);            \
  template bool face_equal(const ConeSpec&, const FaceDescriptor<T>&, const FaceDescriptor<T>&, const Tolerance&); \
  template bool face_contains(const ConeSpec&, const FaceDescriptor<T>&, const FaceDescriptor<T>&, const Tolerance&); \
  template bool in_face_span(const ConeSpec&, const FaceDescriptor<T>&, const Vec<T>&, const Tolerance&);         \
  template Vec<T> pcone_conjugate(const Vec<T>&, const Rational&, Caveats*);                                      \
  template bool in_dirset(const ConeSpec&, const FaceDescriptor<T>&, const Vec<T>&, DirSet, const Tolerance&, Caveats*); \
  template bool frontier_member(const ConeSpec&, const FaceDescriptor<T>&, const Vec<T>&, const Tolerance&, Caveats*); \
  template int frontier_block(const ConeSpec&, const FaceDescriptor<T>&, const Vec<T>&, const Tolerance&, Caveats*); \
  template bool strictly_complementary(const ConeSpec&, const Vec<T>&, const Vec<T>&, const Tolerance&, Caveats*); \
  template bool eps_step_dir(const ConeSpec&, const Vec<T>&, const Vec<T>&);                                      \
  template FaceEmbedding<T> embed_face(const ConeSpec&, const FaceDescriptor<T>&);                               \
  template std::vector<Vec<T>> tangent_equations(const ConeSpec&, const FaceDescriptor<T>&, int);                 \
  template std::vector<Vec<T>> tangent_equations(const ConeSpec&, const FaceDescriptor<T>&);
CONICD_INST(double)
CONICD_INST(Rational)
#undef CONICD_INST

}  // namespace conicd
