#pragma once

#include <string>
#include <vector>

#include "conicd/context.hpp"
#include "conicd/numerics.hpp"

namespace conicd {

enum class BlockKind { PSD, SOC, PCone, Orthant };

struct Block {
  BlockKind kind = BlockKind::Orthant;
  int n = 0;           // matrix order for PSD, vector length otherwise
  Rational p = 2;      // exponent, PCone only

  int dim() const { return kind == BlockKind::PSD ? n * (n + 1) / 2 : n; }
  bool operator==(const Block& o) const { return kind == o.kind && n == o.n && (kind != BlockKind::PCone || p == o.p); }

  static Block psd(int n) { return {BlockKind::PSD, n, 2}; }
  static Block soc(int m) { return {BlockKind::SOC, m, 2}; }
  static Block pcone(int m, Rational p) { return {BlockKind::PCone, m, p}; }
  static Block orthant(int k) { return {BlockKind::Orthant, k, 2}; }
};

struct ConeSpec {
  std::vector<Block> blocks;

  int dim() const;
  int offset(int b) const;
  ConeSpec dual() const;
  bool operator==(const ConeSpec& o) const { return blocks == o.blocks; }
  bool all_of(BlockKind k) const;
  std::string str() const;
};

void validate(const ConeSpec& k);

// Pairing weights: 2 on off-diagonal packed PSD entries, 1 elsewhere, so that
// <x, y> = sum_i w_i x_i y_i is the trace/Euclidean pairing.
Vec<int> pairing_weights(const ConeSpec& k);
template <class T>
T pair(const ConeSpec& k, const Vec<T>& x, const Vec<T>& y);

template <class T>
Sym<T> psd_block(const ConeSpec& k, const Vec<T>& x, int b);
template <class T>
Vec<T> vec_block(const ConeSpec& k, const Vec<T>& x, int b);
template <class T>
void set_block(const ConeSpec& k, Vec<T>& x, int b, const Vec<T>& values);

// Interior reference point: identity / e1 / all-ones per block.
template <class T>
Vec<T> unit_point(const ConeSpec& k);

// Exact p-cone arithmetic is available for integer exponents and for
// vectors with at most one nonzero tail coordinate.
bool pcone_exact(const Rational& p, int nonzeros);

template <class T>
bool member(const ConeSpec& k, const Vec<T>& x, bool strict, const Tolerance& tol, Caveats* cav = nullptr);

// Largest t with x - t * unit_point in the cone (float evaluation).
double margin(const ConeSpec& k, const Vec<double>& x);

enum class RayTag { Zero, Ray, Full };
enum class DirSet { Dir, ClDir, LDir, Tan };

const char* dirset_name(DirSet d);

template <class T>
struct BlockFace {
  BlockKind kind = BlockKind::Orthant;
  // PSD: bases of the range and of the null space of the face.
  int rank = 0;
  Mat<T> range, null;
  // SOC / PCone: generator scaled to first coordinate 1 when tag == Ray.
  RayTag tag = RayTag::Full;
  Vec<T> gen;
  // Orthant: coordinates allowed to be positive.
  std::vector<int> support;
};

template <class T>
struct FaceDescriptor {
  std::vector<BlockFace<T>> blocks;
};

template <class T>
FaceDescriptor<T> minimal_face(const ConeSpec& k, const Vec<T>& x, const Tolerance& tol, Caveats* cav = nullptr);

// Face of k* conjugate to f.
template <class T>
FaceDescriptor<T> conjugate_face(const ConeSpec& k, const FaceDescriptor<T>& f, const Tolerance& tol,
                                 Caveats* cav = nullptr);

// The face {x in k : <u, x> = 0} for u in k*.
template <class T>
FaceDescriptor<T> exposed_face(const ConeSpec& k, const Vec<T>& u, const Tolerance& tol, Caveats* cav = nullptr);

template <class T>
bool face_equal(const ConeSpec& k, const FaceDescriptor<T>& a, const FaceDescriptor<T>& b, const Tolerance& tol);
// Face a is contained in face b.
template <class T>
bool face_contains(const ConeSpec& k, const FaceDescriptor<T>& b, const FaceDescriptor<T>& a, const Tolerance& tol);
// v lies in the linear span of the face.
template <class T>
bool in_face_span(const ConeSpec& k, const FaceDescriptor<T>& f, const Vec<T>& v, const Tolerance& tol);

// Conjugate vector of a boundary ray generator (1; x) of PCone(m, p):
// (1; -x~) with x~_i = sign(x_i) |x_i|^(p-1).
template <class T>
Vec<T> pcone_conjugate(const Vec<T>& gen, const Rational& p, Caveats* cav = nullptr);

template <class T>
bool in_dirset(const ConeSpec& k, const FaceDescriptor<T>& f, const Vec<T>& v, DirSet which, const Tolerance& tol,
               Caveats* cav = nullptr);
template <class T>
bool frontier_member(const ConeSpec& k, const FaceDescriptor<T>& f, const Vec<T>& v, const Tolerance& tol,
                     Caveats* cav = nullptr);

// First block index where v is in cl dir but not dir, or -1.
template <class T>
int frontier_block(const ConeSpec& k, const FaceDescriptor<T>& f, const Vec<T>& v, const Tolerance& tol,
                   Caveats* cav = nullptr);

template <class T>
bool strictly_complementary(const ConeSpec& k, const Vec<T>& u, const Vec<T>& x, const Tolerance& tol,
                            Caveats* cav = nullptr);

// Linear equations (rows over the cone space) cutting out the tangent
// directions of block b at the face f. Whole cone: concatenate over blocks.
template <class T>
std::vector<Vec<T>> tangent_equations(const ConeSpec& k, const FaceDescriptor<T>& f, int b);
template <class T>
std::vector<Vec<T>> tangent_equations(const ConeSpec& k, const FaceDescriptor<T>& f);

// Feasible-direction test by stepping: x + eps v in k for some
// eps in {1e-1, ..., 1e-6}, with exact arithmetic whenever the cone allows it.
template <class T>
bool eps_step_dir(const ConeSpec& k, const Vec<T>& x, const Vec<T>& v);

// Linear parametrization of a face: the face equals L(reduced) with reduced
// ranging over the cone `reduced`. Block origin records the source block.
template <class T>
struct FaceEmbedding {
  ConeSpec reduced;
  Mat<T> map;                // k.dim() x reduced.dim()
  std::vector<int> origin;   // per reduced block, the block index in k
};

template <class T>
FaceEmbedding<T> embed_face(const ConeSpec& k, const FaceDescriptor<T>& f);

}  // namespace conicd
