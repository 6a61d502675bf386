#pragma once

#include <optional>
#include <vector>

#include "conicd/matrix.hpp"

namespace conicd {

// Linear subspace of R^d. Exact mode keeps the basis in reduced row echelon
// form (so equal subspaces have equal bases); float mode keeps it orthonormal.
template <class T>
struct Subspace {
  int ambient = 0;
  std::vector<Vec<T>> basis;

  int dim() const { return static_cast<int>(basis.size()); }
  Mat<T> matrix() const { return Mat<T>::from_columns(basis, ambient); }
};

struct RankInfo {
  int rank = 0;
  bool borderline = false;
};

struct EigenDecomp {
  Vec<double> values;  // descending
  Mat<double> vectors;  // column k pairs with values[k]
};

// Row reduction in place; returns pivot columns. Float mode pivots on the
// largest entry and treats entries below tol * scale as zero.
template <class T>
std::vector<int> rref(Mat<T>& m, const Tolerance& tol);

template <class T>
RankInfo rank_info(const Mat<T>& m, const Tolerance& tol);
template <class T>
int rank_of(const Mat<T>& m, const Tolerance& tol) {
  return rank_info(m, tol).rank;
}
template <class T>
int rank_of(const Sym<T>& m, const Tolerance& tol) {
  return rank_info(m.to_mat(), tol).rank;
}

template <class T>
Subspace<T> span(int ambient, const std::vector<Vec<T>>& vs, const Tolerance& tol);
// Kernel of the map x -> m x, a subspace of R^{m.cols()}.
template <class T>
Subspace<T> nullspace(const Mat<T>& m, const Tolerance& tol);
template <class T>
Subspace<T> orth_complement(const Subspace<T>& s, const Tolerance& tol);
template <class T>
Subspace<T> intersect(const Subspace<T>& a, const Subspace<T>& b, const Tolerance& tol);
template <class T>
bool contains(const Subspace<T>& s, const Vec<T>& v, const Tolerance& tol);
template <class T>
bool subspace_equal(const Subspace<T>& a, const Subspace<T>& b, const Tolerance& tol);

// Coefficients c with sum_j c_j vs[j] = v, or nullopt. The returned c has
// zeros on redundant generators.
template <class T>
std::optional<Vec<T>> solve_in_span(const std::vector<Vec<T>>& vs, const Vec<T>& v, const Tolerance& tol);

// Solves m x = rhs (any solution), or nullopt if inconsistent.
template <class T>
std::optional<Vec<T>> solve_linear(const Mat<T>& m, const Vec<T>& rhs, const Tolerance& tol);

// Every column of b lies in the column space of c.
template <class T>
bool range_included(const Mat<T>& b, const Mat<T>& c, const Tolerance& tol);

// Float symmetric eigendecomposition. Exact input is accepted only when diagonal.
EigenDecomp eigh(const Sym<double>& m, const Tolerance& tol);
EigenDecomp eigh(const Sym<Rational>& m, const Tolerance& tol);

// PSD test: exact by symmetric elimination, float by the smallest eigenvalue
// against tol.feas relative to the scale of m.
template <class T>
bool is_psd(const Sym<T>& m, const Tolerance& tol);
template <class T>
bool is_pd(const Sym<T>& m, const Tolerance& tol);

// Congruence to diagonal form: T^t M T = diag(d). Exact mode uses rational
// symmetric elimination (T need not be orthogonal); float mode uses eigh (T orthogonal).
template <class T>
struct Congruence {
  Mat<T> t;
  Vec<T> d;
};
template <class T>
Congruence<T> diagonalize(const Sym<T>& m, const Tolerance& tol);

template <class T>
std::optional<Mat<T>> inverse(const Mat<T>& m, const Tolerance& tol);

double min_eig(const Sym<double>& m);
double max_eig(const Sym<double>& m);

inline void check_finite(const Mat<double>& m) {
  for (double x : m.data())
    if (!std::isfinite(x)) throw NonFinite("non-finite matrix entry");
}
inline void check_finite(const Mat<Rational>&) {}

}  // namespace conicd
