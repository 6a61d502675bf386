#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conicd/analyzer.hpp"

namespace conicd {

struct InvalidOp : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct CertificateInvalid : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class OpKind { Rotation, Contraction, DeleteRows, DeleteMatrix };
const char* op_name(OpKind k);

// Indices are 0-based. Rotation acts on one block (block >= 0) as a congruence for PSD
// and as x -> T x for vector cones. DeleteRows removes row/column indices of a PSD
// block, or flat coordinates for vector cones (a whole block may go at once).
template <class T>
struct ElementaryOp {
  OpKind kind = OpKind::Rotation;
  int block = 0;
  Mat<T> t;
  int index = 0;
  Vec<T> lambda, mu;
  std::vector<int> rows;

  static ElementaryOp rotation(int block, Mat<T> t) { return {OpKind::Rotation, block, std::move(t), 0, {}, {}, {}}; }
  static ElementaryOp contraction(int i, Vec<T> lambda, Vec<T> mu) {
    return {OpKind::Contraction, 0, {}, i, std::move(lambda), std::move(mu), {}};
  }
  static ElementaryOp delete_rows(int block, std::vector<int> rows) {
    return {OpKind::DeleteRows, block, {}, 0, {}, {}, std::move(rows)};
  }
  static ElementaryOp delete_matrix(int i) { return {OpKind::DeleteMatrix, 0, {}, i, {}, {}, {}}; }
};

// One-line, 1-based rendering ("DeleteMatrix(1)", "DeleteRowCol(2)").
template <class T>
std::string describe(const ElementaryOp<T>& op, const ConeSpec& k);

template <class T>
PrimalSystem<T> apply_op(const PrimalSystem<T>& p, const ElementaryOp<T>& op, const Tolerance& tol);

template <class T>
struct ReductionTrace {
  std::vector<ElementaryOp<T>> ops;
  std::vector<std::string> described;
  PrimalSystem<T> terminal;
  T alpha = T(0);
  bool canonical = false;  // terminal matches the minor exactly, not only up to scale
};

template <class T>
ReductionTrace<T> reduce_sdp(const PrimalSystem<T>& p, const BadCert<T>& cert, const Tolerance& tol);
template <class T>
ReductionTrace<T> reduce_socp(const PrimalSystem<T>& p, const BadCert<T>& cert, const Tolerance& tol);
template <class T>
ReductionTrace<T> reduce(const PrimalSystem<T>& p, const BadCert<T>& cert, const Tolerance& tol);

template <class T>
PrimalSystem<T> replay(const PrimalSystem<T>& p, const std::vector<ElementaryOp<T>>& ops, const Tolerance& tol);

// x1 [[a,c],[c,0]] <= diag(d,0) (d > 0, c != 0) gives a/d;
// x1 (a;a;c) <=_SOC (beta;beta;0) (beta > 0, c != 0) gives a/beta.
template <class T>
std::optional<T> is_canonical_minor(const PrimalSystem<T>& p, const Tolerance& tol);

template <class T>
PrimalSystem<T> minor_system(const T& alpha, bool soc);

}  // namespace conicd
