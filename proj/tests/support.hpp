#pragma once

// Shared generators for the property tests and the acceptance binary.

#include <random>

#include "conicd/systems.hpp"

namespace conicd::testing {

using Rng = std::mt19937_64;

inline Rational rand_rat(Rng& rng, int lo, int hi, int max_den = 1) {
  std::uniform_int_distribution<int> num(lo * max_den, hi * max_den), den(1, max_den);
  Rational q(num(rng), den(rng));
  q.canonicalize();
  return q;
}

inline double rand_unit(Rng& rng) { return std::uniform_real_distribution<double>(-1.0, 1.0)(rng); }

inline Sym<double> rand_sym(Rng& rng, int n) {
  Sym<double> s(n);
  for (auto& x : s.packed()) x = rand_unit(rng);
  return s;
}

inline Sym<Rational> rand_sym_q(Rng& rng, int n, int lo = -3, int hi = 3) {
  Sym<Rational> s(n);
  for (auto& x : s.packed()) x = rand_rat(rng, lo, hi);
  return s;
}

inline Mat<double> rand_orthogonal(Rng& rng, int n) {
  Mat<double> q = Mat<double>::identity(n);
  // Product of random Householder reflections.
  for (int k = 0; k < n; ++k) {
    Vec<double> h(n);
    for (auto& x : h) x = rand_unit(rng);
    double hh = dot(h, h);
    if (hh < 1e-12) continue;
    Mat<double> r = Mat<double>::identity(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) -= 2 * h[i] * h[j] / hh;
    q = q * r;
  }
  return q;
}

// Rational orthogonal matrix (I - S)(I + S)^{-1} from a random skew-symmetric S.
inline Mat<Rational> rand_orthogonal_q(Rng& rng, int n, int range = 2) {
  Mat<Rational> s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      s(i, j) = rand_rat(rng, -range, range);
      s(j, i) = -s(i, j);
    }
  Mat<Rational> id = Mat<Rational>::identity(n);
  auto inv = inverse(id + s, Tolerance{});
  return (id - s) * *inv;
}

// Random invertible rational matrix with small entries.
inline Mat<Rational> rand_invertible_q(Rng& rng, int n, int range = 2) {
  for (;;) {
    Mat<Rational> t(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t(i, j) = rand_rat(rng, -range, range);
    if (rank_of(t, Tolerance{}) == n) return t;
  }
}


// Rational unit vector in R^k (inverse stereographic projection).
inline Vec<Rational> rand_unit_vec_q(Rng& rng, int k) {
  if (k == 1) return {Rational(rng() % 2 ? 1 : -1)};
  Vec<Rational> t(k - 1);
  Rational nt = 0;
  for (auto& x : t) {
    x = rand_rat(rng, -2, 2, 3);
    nt += x * x;
  }
  Vec<Rational> u(k);
  for (int i = 0; i < k - 1; ++i) u[i] = 2 * t[i] / (1 + nt);
  u[k - 1] = (1 - nt) / (1 + nt);
  return u;
}

// A rational point of the cone block with a prescribed face type:
// 0 = zero, 1 = boundary ray, 2 = interior.
inline Vec<Rational> rand_block_point(Rng& rng, const Block& b, int kind) {
  int m = b.dim();
  Vec<Rational> x(m, Rational(0));
  if (kind == 0) return x;
  switch (b.kind) {
    case BlockKind::PSD: {
      int r = kind == 2 ? b.n : static_cast<int>(rng() % (b.n + 1));
      Vec<Rational> d(b.n, Rational(0));
      for (int i = 0; i < r; ++i) d[i] = rand_rat(rng, 1, 3);
      Mat<Rational> t = rng() % 2 ? rand_orthogonal_q(rng, b.n) : rand_invertible_q(rng, b.n);
      return Sym<Rational>::diag(d).congruence(t).packed();
    }
    case BlockKind::SOC:
    case BlockKind::PCone: {
      Rational s = rand_rat(rng, 1, 3);
      if (m == 1) {
        x[0] = s;
        return x;
      }
      if (b.kind == BlockKind::SOC || b.p == 2) {
        Vec<Rational> u = rand_unit_vec_q(rng, m - 1);
        x[0] = s;
        for (int i = 1; i < m; ++i) x[i] = s * u[i - 1];
      } else {
        x[0] = s;
        x[1 + rng() % (m - 1)] = rng() % 2 ? s : Rational(-s);
      }
      if (kind == 2) x[0] += rand_rat(rng, 1, 2);
      return x;
    }
    case BlockKind::Orthant:
      for (auto& e : x) e = rng() % 3 == 0 ? Rational(0) : rand_rat(rng, 1, 3);
      if (kind == 2)
        for (auto& e : x) e += 1;
      return x;
  }
  return x;
}

inline Vec<Rational> rand_cone_point(Rng& rng, const ConeSpec& k) {
  Vec<Rational> x;
  for (const auto& b : k.blocks) {
    auto p = rand_block_point(rng, b, static_cast<int>(rng() % 3));
    x.insert(x.end(), p.begin(), p.end());
  }
  return x;
}

inline Vec<Rational> rand_vec_q(Rng& rng, int d, int range = 2) {
  Vec<Rational> v(d);
  for (auto& e : v) e = rand_rat(rng, -range, range);
  return v;
}

// A direction biased towards the boundary cases of the direction sets at the
// face of x: tangent, lineality, closure-of-feasible, or unstructured.
// A fixed mode (0 lineality, 1 tangent, 2-4 closure variants) applies to every block.
inline Vec<Rational> rand_direction(Rng& rng, const ConeSpec& k, const FaceDescriptor<Rational>& f,
                                    int fixed_mode = -1) {
  Vec<Rational> v;
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    const auto& bf = f.blocks[b];
    int mode = fixed_mode >= 0 ? fixed_mode : static_cast<int>(rng() % 5);
    Vec<Rational> part;
    if (bl.kind == BlockKind::PSD) {
      int n = bl.n, r = bf.rank;
      Mat<Rational> t = bf.range.hcat(bf.null);
      // Build W in the (range, null) coordinates, then map back with T^{-T} W T^{-1}.
      Sym<Rational> w(n);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          bool in22 = i >= r, in12 = i < r && j >= r;
          Rational val = rand_rat(rng, -2, 2);
          if (mode == 0 && (in22 || in12)) val = 0;          // lineality
          if (mode == 1 && in22) val = 0;                     // tangent
          if (mode >= 2 && in22) val = 0;
          w(i, j) = val;
        }
      if (mode >= 2 && n - r > 0) {
        // Y22 = c c^T (rank <= 1) or a random PSD block; Y12 in or out of its range.
        Vec<Rational> c = rand_vec_q(rng, n - r);
        for (int i = 0; i < n - r; ++i)
          for (int j = i; j < n - r; ++j) w(r + i, r + j) = c[i] * c[j];
        if (mode == 2)
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < n - r; ++j) w(i, r + j) = rand_rat(rng, -1, 1) * c[j];
        if (mode == 4) w(r, r) -= 1;
      }
      auto tinv = inverse(t, Tolerance{});
      part = w.congruence(*tinv).packed();
    } else if (bl.kind == BlockKind::Orthant) {
      part = rand_vec_q(rng, bl.n);
      for (int i : bf.support) (void)i;
      if (mode <= 1)
        for (auto& e : part)
          if (rng() % 2) e = 0;
    } else {
      int m = bl.n;
      part = rand_vec_q(rng, m);
      if (bf.tag == RayTag::Ray) {
        Vec<Rational> conj = pcone_conjugate(bf.gen, bl.kind == BlockKind::SOC ? Rational(2) : bl.p);
        Rational lam = rand_rat(rng, -2, 2);
        if (mode == 0) part = scale(bf.gen, lam);
        if (mode == 1 || mode == 2) {
          // Project onto the tangent hyperplane <., conj> = 0 along e1.
          Rational t = dot(part, conj);
          part[0] -= t / conj[0];
          if (mode == 2) part[0] += rand_rat(rng, 0, 1);
        }
      } else if (bf.tag == RayTag::Zero && mode <= 1) {
        part = rand_block_point(rng, bl, static_cast<int>(rng() % 3));
      }
    }
    v.insert(v.end(), part.begin(), part.end());
  }
  return v;
}

inline ConeSpec rand_small_cone(Rng& rng, int max_blocks = 2) {
  ConeSpec k;
  int nb = 1 + static_cast<int>(rng() % max_blocks);
  for (int i = 0; i < nb; ++i) {
    switch (rng() % 4) {
      case 0: k.blocks.push_back(Block::psd(1 + static_cast<int>(rng() % 4))); break;
      case 1: k.blocks.push_back(Block::soc(2 + static_cast<int>(rng() % 4))); break;
      case 2: {
        static const Rational ps[] = {Rational(3), Rational(3, 2), Rational(4)};
        k.blocks.push_back(Block::pcone(2 + static_cast<int>(rng() % 4), ps[rng() % 3]));
        break;
      }
      default: k.blocks.push_back(Block::orthant(1 + static_cast<int>(rng() % 3))); break;
    }
  }
  return k;
}

// A primal system with a known feasible point: z from the cone, b = z + A xbar.
// Structured systems take their constraint elements from biased directions at
// the face of z, so that pathological faces are common.
struct RandomSystem {
  PrimalSystem<Rational> p;
  Vec<Rational> xbar;
  Vec<Rational> z;
};

inline RandomSystem rand_system(Rng& rng, const ConeSpec& k, bool structured, int max_m = 3,
                                int fixed_mode = -1) {
  RandomSystem r;
  r.z = rand_cone_point(rng, k);
  FaceDescriptor<Rational> f = minimal_face(k, r.z, Tolerance{0, 0, 0});
  int m = 1 + static_cast<int>(rng() % max_m);
  r.p.k = k;
  for (int j = 0; j < m; ++j)
    r.p.a.push_back(structured ? rand_direction(rng, k, f, fixed_mode) : rand_vec_q(rng, k.dim()));
  r.xbar = rand_vec_q(rng, m);
  r.p.b = r.z;
  for (int j = 0; j < m; ++j) r.p.b = axpy(r.p.b, r.xbar[j], r.p.a[j]);
  return r;
}

}  // namespace conicd::testing
