#include "conicd/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>

namespace conicd {

namespace {

Eigen::MatrixXd to_eigen(const Mat<double>& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

Mat<double> from_eigen(const Eigen::MatrixXd& e) {
  Mat<double> m(static_cast<int>(e.rows()), static_cast<int>(e.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

struct Svd {
  Eigen::MatrixXd u, v;
  Eigen::VectorXd s;
};

Svd svd(const Mat<double>& m) {
  check_finite(m);
  Eigen::JacobiSVD<Eigen::MatrixXd> sv(to_eigen(m), Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {sv.matrixU(), sv.matrixV(), sv.singularValues()};
}

int numerical_rank(const Eigen::VectorXd& s, double tol) {
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return r;
}

std::vector<Vec<double>> columns_of(const Eigen::MatrixXd& e, int from, int to) {
  std::vector<Vec<double>> out;
  for (int j = from; j < to; ++j) {
    Vec<double> v(e.rows());
    for (int i = 0; i < e.rows(); ++i) v[i] = e(i, j);
    out.push_back(v);
  }
  return out;
}

Mat<Rational> rows_matrix(const std::vector<Vec<Rational>>& vs, int ambient) {
  Mat<Rational> m(static_cast<int>(vs.size()), ambient);
  for (size_t i = 0; i < vs.size(); ++i)
    for (int j = 0; j < ambient; ++j) m(int(i), j) = vs[i][j];
  return m;
}

}  // namespace

template <>
std::vector<int> rref(Mat<Rational>& m, const Tolerance&) {
  std::vector<int> piv;
  int r = 0;
  for (int c = 0; c < m.cols() && r < m.rows(); ++c) {
    int p = -1;
    for (int i = r; i < m.rows(); ++i)
      if (sgn(m(i, c)) != 0) {
        p = i;
        break;
      }
    if (p < 0) continue;
    if (p != r)
      for (int j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
    Rational inv = 1 / m(r, c);
    for (int j = c; j < m.cols(); ++j) m(r, j) *= inv;
    for (int i = 0; i < m.rows(); ++i) {
      if (i == r || sgn(m(i, c)) == 0) continue;
      Rational f = m(i, c);
      for (int j = c; j < m.cols(); ++j) m(i, j) -= f * m(r, j);
    }
    piv.push_back(c);
    ++r;
  }
  return piv;
}

template <>
std::vector<int> rref(Mat<double>& m, const Tolerance& tol) {
  check_finite(m);
  double scale = max_abs(m);
  double eps = tol.rank * std::max(scale, 1e-300);
  std::vector<int> piv;
  int r = 0;
  for (int c = 0; c < m.cols() && r < m.rows(); ++c) {
    int p = r;
    for (int i = r + 1; i < m.rows(); ++i)
      if (std::fabs(m(i, c)) > std::fabs(m(p, c))) p = i;
    if (std::fabs(m(p, c)) <= eps) {
      for (int i = r; i < m.rows(); ++i) m(i, c) = 0;
      continue;
    }
    if (p != r)
      for (int j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
    double inv = 1.0 / m(r, c);
    for (int j = c; j < m.cols(); ++j) m(r, j) *= inv;
    for (int i = 0; i < m.rows(); ++i) {
      if (i == r || m(i, c) == 0) continue;
      double f = m(i, c);
      for (int j = c; j < m.cols(); ++j) m(i, j) -= f * m(r, j);
      m(i, c) = 0;
    }
    piv.push_back(c);
    ++r;
  }
  return piv;
}

template <>
RankInfo rank_info(const Mat<Rational>& m, const Tolerance& tol) {
  Mat<Rational> c = m;
  return {static_cast<int>(rref(c, tol).size()), false};
}

template <>
RankInfo rank_info(const Mat<double>& m, const Tolerance& tol) {
  if (m.rows() == 0 || m.cols() == 0) return {0, false};
  Svd d = svd(m);
  RankInfo ri{numerical_rank(d.s, tol.rank), false};
  if (d.s(0) > 0)
    for (int i = 0; i < d.s.size(); ++i) {
      double rel = d.s(i) / d.s(0);
      if (rel > tol.rank * 1e-2 && rel < tol.rank * 1e2) ri.borderline = true;
    }
  return ri;
}

template <>
Subspace<Rational> span(int ambient, const std::vector<Vec<Rational>>& vs, const Tolerance& tol) {
  for (const auto& v : vs)
    if (static_cast<int>(v.size()) != ambient) throw DimensionMismatch("span: vector length mismatch");
  Mat<Rational> m = rows_matrix(vs, ambient);
  auto piv = rref(m, tol);
  Subspace<Rational> s{ambient, {}};
  for (size_t i = 0; i < piv.size(); ++i) s.basis.push_back(m.row(int(i)));
  return s;
}

template <>
Subspace<double> span(int ambient, const std::vector<Vec<double>>& vs, const Tolerance& tol) {
  for (const auto& v : vs)
    if (static_cast<int>(v.size()) != ambient) throw DimensionMismatch("span: vector length mismatch");
  Subspace<double> s{ambient, {}};
  if (vs.empty() || ambient == 0) return s;
  Svd d = svd(Mat<double>::from_columns(vs, ambient));
  int r = numerical_rank(d.s, tol.rank);
  s.basis = columns_of(d.u, 0, r);
  return s;
}

template <>
Subspace<Rational> nullspace(const Mat<Rational>& m, const Tolerance& tol) {
  Mat<Rational> a = m;
  auto piv = rref(a, tol);
  std::vector<bool> is_piv(m.cols(), false);
  for (int c : piv) is_piv[c] = true;
  std::vector<Vec<Rational>> out;
  for (int f = 0; f < m.cols(); ++f) {
    if (is_piv[f]) continue;
    Vec<Rational> v(m.cols(), Rational(0));
    v[f] = 1;
    for (size_t i = 0; i < piv.size(); ++i) v[piv[i]] = -a(int(i), f);
    out.push_back(v);
  }
  return span(m.cols(), out, tol);
}

template <>
Subspace<double> nullspace(const Mat<double>& m, const Tolerance& tol) {
  Subspace<double> s{m.cols(), {}};
  if (m.cols() == 0) return s;
  if (m.rows() == 0 || max_abs(m) == 0.0) {
    for (int j = 0; j < m.cols(); ++j) {
      Vec<double> e(m.cols(), 0.0);
      e[j] = 1.0;
      s.basis.push_back(e);
    }
    return s;
  }
  Svd d = svd(m);
  int r = numerical_rank(d.s, tol.rank);
  s.basis = columns_of(d.v, r, m.cols());
  return s;
}

template <class T>
Subspace<T> orth_complement(const Subspace<T>& s, const Tolerance& tol) {
  Mat<T> m(s.dim(), s.ambient);
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j < s.ambient; ++j) m(i, j) = s.basis[i][j];
  return nullspace(m, tol);
}

template <class T>
Subspace<T> intersect(const Subspace<T>& a, const Subspace<T>& b, const Tolerance& tol) {
  if (a.ambient != b.ambient) throw DimensionMismatch("intersect: ambient dimension mismatch");
  int d = a.ambient;
  if (a.dim() == 0 || b.dim() == 0) return {d, {}};
  Mat<T> m(d, a.dim() + b.dim());
  for (int j = 0; j < a.dim(); ++j)
    for (int i = 0; i < d; ++i) m(i, j) = a.basis[j][i];
  for (int j = 0; j < b.dim(); ++j)
    for (int i = 0; i < d; ++i) m(i, a.dim() + j) = -b.basis[j][i];
  Subspace<T> ker = nullspace(m, tol);
  std::vector<Vec<T>> vs;
  for (const auto& k : ker.basis) {
    Vec<T> v(d, T(0));
    for (int j = 0; j < a.dim(); ++j) v = axpy(v, k[j], a.basis[j]);
    vs.push_back(v);
  }
  return span(d, vs, tol);
}

template <>
bool contains(const Subspace<Rational>& s, const Vec<Rational>& v, const Tolerance& tol) {
  if (static_cast<int>(v.size()) != s.ambient) throw DimensionMismatch("contains: length mismatch");
  auto vs = s.basis;
  vs.push_back(v);
  return span(s.ambient, vs, tol).dim() == s.dim();
}

template <>
bool contains(const Subspace<double>& s, const Vec<double>& v, const Tolerance& tol) {
  if (static_cast<int>(v.size()) != s.ambient) throw DimensionMismatch("contains: length mismatch");
  for (double x : v)
    if (!std::isfinite(x)) throw NonFinite("contains: non-finite entry");
  Vec<double> r = v;
  for (const auto& q : s.basis) r = axpy(r, -dot(q, v), q);
  return norm2(r) <= tol.rank * std::max(norm2(v), 1e-300) || norm2(v) == 0.0;
}

template <class T>
bool subspace_equal(const Subspace<T>& a, const Subspace<T>& b, const Tolerance& tol) {
  if (a.ambient != b.ambient || a.dim() != b.dim()) return false;
  for (const auto& v : b.basis)
    if (!contains(a, v, tol)) return false;
  return true;
}

template <>
std::optional<Vec<Rational>> solve_linear(const Mat<Rational>& m, const Vec<Rational>& rhs, const Tolerance& tol) {
  if (static_cast<int>(rhs.size()) != m.rows()) throw DimensionMismatch("solve_linear: rhs length mismatch");
  Mat<Rational> a(m.rows(), m.cols() + 1);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) a(i, j) = m(i, j);
    a(i, m.cols()) = rhs[i];
  }
  auto piv = rref(a, tol);
  if (!piv.empty() && piv.back() == m.cols()) return std::nullopt;
  Vec<Rational> x(m.cols(), Rational(0));
  for (size_t i = 0; i < piv.size(); ++i) x[piv[i]] = a(int(i), m.cols());
  return x;
}

template <>
std::optional<Vec<double>> solve_linear(const Mat<double>& m, const Vec<double>& rhs, const Tolerance& tol) {
  if (static_cast<int>(rhs.size()) != m.rows()) throw DimensionMismatch("solve_linear: rhs length mismatch");
  check_finite(m);
  if (m.cols() == 0) {
    if (norm2(rhs) == 0.0) return Vec<double>{};
    return std::nullopt;
  }
  Eigen::MatrixXd e = to_eigen(m);
  Eigen::VectorXd b(rhs.size());
  for (size_t i = 0; i < rhs.size(); ++i) b(i) = rhs[i];
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(e);
  cod.setThreshold(tol.rank);
  Eigen::VectorXd x = cod.solve(b);
  double res = (e * x - b).norm();
  double scale = std::max({b.norm(), e.norm() * x.norm(), 1e-300});
  if (res > 1e3 * tol.rank * scale && res > 1e-12) return std::nullopt;
  Vec<double> out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = x(i);
  return out;
}

template <class T>
std::optional<Vec<T>> solve_in_span(const std::vector<Vec<T>>& vs, const Vec<T>& v, const Tolerance& tol) {
  if (vs.empty()) {
    if (is_zero_vec(v, 0.0)) return Vec<T>{};
    return std::nullopt;
  }
  return solve_linear(Mat<T>::from_columns(vs, static_cast<int>(v.size())), v, tol);
}

template <>
bool range_included(const Mat<Rational>& b, const Mat<Rational>& c, const Tolerance& tol) {
  if (b.rows() != c.rows()) throw DimensionMismatch("range_included: row counts differ");
  return rank_of(c.hcat(b), tol) == rank_of(c, tol);
}

template <>
bool range_included(const Mat<double>& b, const Mat<double>& c, const Tolerance& tol) {
  if (b.rows() != c.rows()) throw DimensionMismatch("range_included: row counts differ");
  check_finite(b);
  check_finite(c);
  double bn = max_abs(b);
  if (bn == 0.0) return true;
  Subspace<double> rc = span(c.rows(), c.columns(), tol);
  double res = 0.0;
  for (const auto& col : b.columns()) {
    Vec<double> r = col;
    for (const auto& q : rc.basis) r = axpy(r, -dot(q, col), q);
    res = std::max(res, norm2(r));
  }
  return res <= tol.rank * std::sqrt(double(b.rows() * b.cols())) * bn * 1e3 || res <= 1e-12 * bn;
}

EigenDecomp eigh(const Sym<double>& m, const Tolerance&) {
  int n = m.n();
  Mat<double> full = m.to_mat();
  check_finite(full);
  EigenDecomp out{Vec<double>(n), Mat<double>(n, n)};
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(full));
  // Eigen sorts ascending.
  for (int k = 0; k < n; ++k) {
    int src = n - 1 - k;
    out.values[k] = es.eigenvalues()(src);
    for (int i = 0; i < n; ++i) out.vectors(i, k) = es.eigenvectors()(i, src);
  }
  return out;
}

EigenDecomp eigh(const Sym<Rational>& m, const Tolerance&) {
  int n = m.n();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (sgn(m(i, j)) != 0) throw Unsupported("eigh: exact mode supports diagonal matrices only");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return m(a, a) > m(b, b); });
  EigenDecomp out{Vec<double>(n), Mat<double>(n, n)};
  for (int k = 0; k < n; ++k) {
    out.values[k] = m(idx[k], idx[k]).get_d();
    out.vectors(idx[k], k) = 1.0;
  }
  return out;
}

double min_eig(const Sym<double>& m) {
  if (m.n() == 0) return 0.0;
  return eigh(m, Tolerance{}).values.back();
}

double max_eig(const Sym<double>& m) {
  if (m.n() == 0) return 0.0;
  return eigh(m, Tolerance{}).values.front();
}

namespace {

// Symmetric elimination. Returns false as soon as the matrix is seen to be
// indefinite (when require_psd); otherwise fills t and d with t^T m t = diag(d).
bool eliminate(const Sym<Rational>& m, bool require_psd, Mat<Rational>* t_out, Vec<Rational>* d_out) {
  int n = m.n();
  Mat<Rational> a = m.to_mat();
  Mat<Rational> t = Mat<Rational>::identity(n);
  for (int k = 0; k < n; ++k) {
    int p = -1;
    for (int j = k; j < n; ++j)
      if (sgn(a(j, j)) != 0) {
        if (require_psd && sgn(a(j, j)) < 0) return false;
        if (p < 0) p = j;
      }
    if (p < 0) {
      // Zero diagonal on the trailing block: a nonzero off-diagonal entry is
      // indefinite; otherwise make a nonzero diagonal by adding a row/column.
      int pi = -1, pj = -1;
      for (int i = k; i < n && pi < 0; ++i)
        for (int j = i + 1; j < n; ++j)
          if (sgn(a(i, j)) != 0) {
            pi = i, pj = j;
            break;
          }
      if (pi < 0) break;
      if (require_psd) return false;
      for (int r = 0; r < n; ++r) a(r, pi) += a(r, pj);
      for (int c = 0; c < n; ++c) a(pi, c) += a(pj, c);
      for (int r = 0; r < n; ++r) t(r, pi) += t(r, pj);
      p = pi;
    }
    if (p != k) {
      for (int r = 0; r < n; ++r) std::swap(a(r, p), a(r, k));
      for (int c = 0; c < n; ++c) std::swap(a(p, c), a(k, c));
      for (int r = 0; r < n; ++r) std::swap(t(r, p), t(r, k));
    }
    for (int i = k + 1; i < n; ++i) {
      if (sgn(a(k, i)) == 0) continue;
      Rational f = a(k, i) / a(k, k);
      for (int r = 0; r < n; ++r) a(r, i) -= f * a(r, k);
      for (int c = 0; c < n; ++c) a(i, c) -= f * a(k, c);
      for (int r = 0; r < n; ++r) t(r, i) -= f * t(r, k);
    }
  }
  if (require_psd)
    for (int i = 0; i < n; ++i)
      if (sgn(a(i, i)) < 0) return false;
  if (t_out) *t_out = t;
  if (d_out) {
    d_out->assign(n, Rational(0));
    for (int i = 0; i < n; ++i) (*d_out)[i] = a(i, i);
  }
  return true;
}

double sym_scale(const Sym<double>& m) { return std::max(1.0, max_abs(m.packed())); }

}  // namespace

template <>
bool is_psd(const Sym<Rational>& m, const Tolerance&) {
  return eliminate(m, true, nullptr, nullptr);
}

template <>
bool is_psd(const Sym<double>& m, const Tolerance& tol) {
  if (m.n() == 0) return true;
  return min_eig(m) >= -tol.feas * sym_scale(m);
}

template <>
bool is_pd(const Sym<Rational>& m, const Tolerance& tol) {
  Vec<Rational> d;
  if (!eliminate(m, true, nullptr, &d)) return false;
  for (const auto& x : d)
    if (sgn(x) <= 0) return false;
  (void)tol;
  return true;
}

template <>
bool is_pd(const Sym<double>& m, const Tolerance& tol) {
  if (m.n() == 0) return true;
  return min_eig(m) > tol.feas * sym_scale(m);
}

template <>
Congruence<Rational> diagonalize(const Sym<Rational>& m, const Tolerance&) {
  Congruence<Rational> c;
  eliminate(m, false, &c.t, &c.d);
  return c;
}

template <>
Congruence<double> diagonalize(const Sym<double>& m, const Tolerance& tol) {
  EigenDecomp e = eigh(m, tol);
  return {e.vectors, e.values};
}

template <>
std::optional<Mat<Rational>> inverse(const Mat<Rational>& m, const Tolerance& tol) {
  if (m.rows() != m.cols()) throw DimensionMismatch("inverse: not square");
  int n = m.rows();
  Mat<Rational> a = m.hcat(Mat<Rational>::identity(n));
  auto piv = rref(a, tol);
  if (static_cast<int>(piv.size()) < n || (n > 0 && piv[n - 1] != n - 1)) return std::nullopt;
  return a.block(0, n, n, n);
}

template <>
std::optional<Mat<double>> inverse(const Mat<double>& m, const Tolerance& tol) {
  if (m.rows() != m.cols()) throw DimensionMismatch("inverse: not square");
  check_finite(m);
  if (m.rows() == 0) return m;
  if (rank_of(m, tol) < m.rows()) return std::nullopt;
  return from_eigen(to_eigen(m).inverse());
}

#define CONICD_INST(T)                                                                                      \
  template Subspace<T> orth_complement(const Subspace<T>&, const Tolerance&);                              \
  template Subspace<T> intersect(const Subspace<T>&, const Subspace<T>&, const Tolerance&);                \
  template bool subspace_equal(const Subspace<T>&, const Subspace<T>&, const Tolerance&);                  \
  template std::optional<Vec<T>> solve_in_span(const std::vector<Vec<T>>&, const Vec<T>&, const Tolerance&);
CONICD_INST(double)
CONICD_INST(Rational)
#undef CONICD_INST

}  // namespace conicd
