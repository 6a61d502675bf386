#pragma once

#include <cassert>
#include <vector>

#include "conicd/scalar.hpp"

namespace conicd {

template <class T>
using Vec = std::vector<T>;

// Dense row-major rectangular matrix.
template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(int r, int c) : r_(r), c_(c), a_(static_cast<size_t>(r) * c, T(0)) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }
  static Mat from_columns(const std::vector<Vec<T>>& cols, int rows) {
    Mat m(rows, static_cast<int>(cols.size()));
    for (int j = 0; j < m.c_; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = cols[j][i];
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  T& operator()(int i, int j) { return a_[static_cast<size_t>(i) * c_ + j]; }
  const T& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * c_ + j]; }

  Vec<T> col(int j) const {
    Vec<T> v(r_);
    for (int i = 0; i < r_; ++i) v[i] = (*this)(i, j);
    return v;
  }
  Vec<T> row(int i) const { return Vec<T>(a_.begin() + size_t(i) * c_, a_.begin() + size_t(i + 1) * c_); }
  void set_col(int j, const Vec<T>& v) {
    for (int i = 0; i < r_; ++i) (*this)(i, j) = v[i];
  }
  std::vector<Vec<T>> columns() const {
    std::vector<Vec<T>> out;
    for (int j = 0; j < c_; ++j) out.push_back(col(j));
    return out;
  }

  Mat transpose() const {
    Mat t(c_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }
  Mat block(int i0, int j0, int nr, int nc) const {
    Mat b(nr, nc);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nc; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
    return b;
  }
  // Columns listed in idx, in order.
  Mat select_cols(const std::vector<int>& idx) const {
    Mat b(r_, static_cast<int>(idx.size()));
    for (int i = 0; i < r_; ++i)
      for (size_t j = 0; j < idx.size(); ++j) b(i, int(j)) = (*this)(i, idx[j]);
    return b;
  }
  Mat hcat(const Mat& o) const {
    assert(o.r_ == r_ || c_ == 0 || o.c_ == 0);
    int rr = c_ == 0 ? o.r_ : r_;
    Mat m(rr, c_ + o.c_);
    for (int i = 0; i < rr; ++i) {
      for (int j = 0; j < c_; ++j) m(i, j) = (*this)(i, j);
      for (int j = 0; j < o.c_; ++j) m(i, c_ + j) = o(i, j);
    }
    return m;
  }
  Mat vcat(const Mat& o) const {
    int cc = r_ == 0 ? o.c_ : c_;
    Mat m(r_ + o.r_, cc);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < cc; ++j) m(i, j) = (*this)(i, j);
    for (int i = 0; i < o.r_; ++i)
      for (int j = 0; j < cc; ++j) m(r_ + i, j) = o(i, j);
    return m;
  }

  Mat operator*(const Mat& o) const {
    if (c_ != o.r_) throw DimensionMismatch("matrix product shape mismatch");
    Mat m(r_, o.c_);
    for (int i = 0; i < r_; ++i)
      for (int k = 0; k < c_; ++k) {
        const T& aik = (*this)(i, k);
        if (aik == 0) continue;
        for (int j = 0; j < o.c_; ++j) m(i, j) += aik * o(k, j);
      }
    return m;
  }
  Vec<T> operator*(const Vec<T>& v) const {
    if (static_cast<int>(v.size()) != c_) throw DimensionMismatch("matrix-vector shape mismatch");
    Vec<T> out(r_, T(0));
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) out[i] += (*this)(i, j) * v[j];
    return out;
  }
  Mat operator+(const Mat& o) const {
    Mat m = *this;
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] += o.a_[k];
    return m;
  }
  Mat operator-(const Mat& o) const {
    Mat m = *this;
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] -= o.a_[k];
    return m;
  }
  Mat scaled(const T& s) const {
    Mat m = *this;
    for (auto& x : m.a_) x *= s;
    return m;
  }
  bool operator==(const Mat& o) const { return r_ == o.r_ && c_ == o.c_ && a_ == o.a_; }

  const std::vector<T>& data() const { return a_; }

 private:
  int r_ = 0, c_ = 0;
  std::vector<T> a_;
};

// Symmetric matrix stored as its packed upper triangle, row by row.
template <class T>
class Sym {
 public:
  Sym() = default;
  explicit Sym(int n) : n_(n), a_(packed_size(n), T(0)) {}
  Sym(int n, Vec<T> packed) : n_(n), a_(std::move(packed)) {
    if (static_cast<int>(a_.size()) != packed_size(n)) throw DimensionMismatch("packed size mismatch");
  }

  static int packed_size(int n) { return n * (n + 1) / 2; }
  static int index(int n, int i, int j) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
  }
  static Sym identity(int n) {
    Sym s(n);
    for (int i = 0; i < n; ++i) s(i, i) = T(1);
    return s;
  }
  static Sym diag(const Vec<T>& d) {
    Sym s(static_cast<int>(d.size()));
    for (int i = 0; i < s.n_; ++i) s(i, i) = d[i];
    return s;
  }
  // Upper triangle of m is used.
  static Sym from_upper(const Mat<T>& m) {
    Sym s(m.rows());
    for (int i = 0; i < s.n_; ++i)
      for (int j = i; j < s.n_; ++j) s(i, j) = m(i, j);
    return s;
  }
  // Symmetric part of m.
  static Sym from_mat(const Mat<T>& m) {
    Sym s(m.rows());
    for (int i = 0; i < s.n_; ++i)
      for (int j = i; j < s.n_; ++j) s(i, j) = i == j ? m(i, i) : (m(i, j) + m(j, i)) / T(2);
    return s;
  }

  int n() const { return n_; }
  T& operator()(int i, int j) { return a_[index(n_, i, j)]; }
  const T& operator()(int i, int j) const { return a_[index(n_, i, j)]; }
  const Vec<T>& packed() const { return a_; }
  Vec<T>& packed() { return a_; }

  Mat<T> to_mat() const {
    Mat<T> m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
    return m;
  }
  // T^t * this * T
  Sym congruence(const Mat<T>& t) const { return from_upper(t.transpose() * to_mat() * t); }
  Sym principal(const std::vector<int>& idx) const {
    Sym s(static_cast<int>(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i)
      for (size_t j = i; j < idx.size(); ++j) s(int(i), int(j)) = (*this)(idx[i], idx[j]);
    return s;
  }
  bool operator==(const Sym& o) const { return n_ == o.n_ && a_ == o.a_; }

 private:
  int n_ = 0;
  Vec<T> a_;
};

template <class T>
T dot(const Vec<T>& a, const Vec<T>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: length mismatch");
  T s(0);
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Trace pairing of two symmetric matrices.
template <class T>
T trace_inner(const Sym<T>& a, const Sym<T>& b) {
  T s(0);
  for (int i = 0; i < a.n(); ++i)
    for (int j = i; j < a.n(); ++j) s += (i == j ? T(1) : T(2)) * a(i, j) * b(i, j);
  return s;
}

template <class T>
Vec<T> axpy(const Vec<T>& y, const T& a, const Vec<T>& x) {
  Vec<T> out = y;
  for (size_t i = 0; i < out.size(); ++i) out[i] += a * x[i];
  return out;
}

template <class T>
Vec<T> scale(const Vec<T>& x, const T& a) {
  Vec<T> out = x;
  for (auto& e : out) e *= a;
  return out;
}

template <class T>
Vec<T> sub(const Vec<T>& a, const Vec<T>& b) {
  Vec<T> out = a;
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

template <class T>
Vec<T> add(const Vec<T>& a, const Vec<T>& b) {
  Vec<T> out = a;
  for (size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

template <class T>
double norm2(const Vec<T>& v) {
  double s = 0;
  for (const auto& x : v) {
    double d = Field<T>::to_double(x);
    s += d * d;
  }
  return std::sqrt(s);
}

template <class T>
double max_abs(const Vec<T>& v) {
  double m = 0;
  for (const auto& x : v) m = std::max(m, std::fabs(Field<T>::to_double(x)));
  return m;
}

template <class T>
double max_abs(const Mat<T>& m) {
  return max_abs(m.data());
}

template <class T>
bool is_zero_vec(const Vec<T>& v, double tol) {
  for (const auto& x : v)
    if (!Field<T>::is_zero(x, tol)) return false;
  return true;
}

template <class T, class U>
Vec<U> convert_vec(const Vec<T>& v) {
  Vec<U> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if constexpr (std::is_same_v<U, double>)
      out.push_back(Field<T>::to_double(x));
    else if constexpr (std::is_same_v<T, double>)
      out.push_back(Field<U>::from_double(x));
    else
      out.push_back(U(x));
  }
  return out;
}

template <class T, class U>
Mat<U> convert_mat(const Mat<T>& m) {
  Mat<U> out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      if constexpr (std::is_same_v<U, double>)
        out(i, j) = Field<T>::to_double(m(i, j));
      else if constexpr (std::is_same_v<T, double>)
        out(i, j) = Field<U>::from_double(m(i, j));
      else
        out(i, j) = U(m(i, j));
    }
  return out;
}

}  // namespace conicd
