#ifndef GMEASURE_MEASURES_HPP
#define GMEASURE_MEASURES_HPP

// Measures on the cylinder algebra F_n, the adjoint transfer operator
// L* acting on them, block marginals of chain extensions and stationary
// measures for finite-memory g.
//
// Word-order bridge: block marginals index symbols in order of prepending
// (the first-added symbol at index 0), while adjoint_power stores
// prefix-ordered words (coordinate 0 of the current sequence first).
// reverse_words() is the one documented conversion between the two.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gmeasure/core.hpp"
#include "gmeasure/symbolic.hpp"

namespace gmeasure {

struct CylinderMeasure {
  Alphabet alphabet{2};
  int depth = 0;
  std::vector<double> mass;  // indexed by word_index over length-depth words

  double total() const {
    CompensatedSum s;
    for (double v : mass) s.add(v);
    return s.value();
  }

  void validate(double tol = 1e-12) const {
    if (mass.size() != word_count(alphabet, depth))
      throw std::invalid_argument("CylinderMeasure: size != |S|^depth");
    for (double v : mass)
      if (v < 0) throw std::invalid_argument("CylinderMeasure: negative mass");
    if (std::abs(total() - 1.0) > tol)
      throw std::invalid_argument("CylinderMeasure: masses do not sum to 1");
  }

  static CylinderMeasure point_mass(const Alphabet& a, const Word& w) {
    check_word(a, w);
    CylinderMeasure m{a, int(w.size()),
                      std::vector<double>(word_count(a, int(w.size())), 0.0)};
    m.mass[word_index(a, w)] = 1.0;
    return m;
  }

  static CylinderMeasure uniform(const Alphabet& a, int depth) {
    std::size_t n = word_count(a, depth);
    return {a, depth, std::vector<double>(n, 1.0 / double(n))};
  }
};

// A block marginal is the law of the next b symbols appended to a fixed
// past, stored in prepend order.
using BlockMarginal = CylinderMeasure;

// Drop the last `k` coordinates (the deepest ones in the stored order).
inline CylinderMeasure marginalize_last(const CylinderMeasure& m, int k) {
  if (k < 0 || k > m.depth)
    throw std::invalid_argument("marginalize_last: bad k");
  if (k == 0) return m;
  std::size_t keep = word_count(m.alphabet, m.depth - k);
  std::size_t drop = word_count(m.alphabet, k);
  CylinderMeasure out{m.alphabet, m.depth - k, std::vector<double>(keep, 0.0)};
  for (std::size_t i = 0; i < keep; ++i) {
    CompensatedSum s;
    for (std::size_t j = 0; j < drop; ++j) s.add(m.mass[i * drop + j]);
    out.mass[i] = s.value();
  }
  return out;
}

inline CylinderMeasure reverse_words(const CylinderMeasure& m) {
  CylinderMeasure out{m.alphabet, m.depth,
                      std::vector<double>(m.mass.size(), 0.0)};
  for (std::size_t i = 0; i < m.mass.size(); ++i) {
    Word w = word_at(m.alphabet, i, m.depth);
    std::reverse(w.begin(), w.end());
    out.mass[word_index(m.alphabet, w)] = m.mass[i];
  }
  return out;
}

// Law of the next b symbols given `past`:
//   mass(y_1 ... y_b) = prod_i g(y_i | y_{i-1} ... y_1 past).
inline BlockMarginal block_marginal(const GFunction& g, const Word& past,
                                    int b) {
  if (b <= 0) throw std::invalid_argument("block_marginal: b must be >= 1");
  const Alphabet& a = g.alphabet();
  check_word(a, past);
  std::size_t n = word_count(a, b);
  BlockMarginal out{a, b, std::vector<double>(n)};
  Word ext;  // evolving past: (y_i, ..., y_1, past...)
  for (std::size_t i = 0; i < n; ++i) {
    Word w = word_at(a, i, b);
    ext.assign(past.begin(), past.end());
    double p = 1.0;
    for (int j = 0; j < b; ++j) {
      ext.insert(ext.begin(), w[std::size_t(j)]);
      p *= eval_g(g, ext);
    }
    out.mass[i] = p;
  }
  return out;
}

// n applications of the adjoint transfer operator L* to nu, with the depth
// capped: coordinates deeper than `depth_cap` are exactly marginalized out.
// Words are stored prefix-ordered (newest coordinate first).
inline CylinderMeasure adjoint_power(const GFunction& g,
                                     const CylinderMeasure& nu, int n,
                                     int depth_cap = 20) {
  if (n <= 0) throw std::invalid_argument("adjoint_power: n must be >= 1");
  int need = g.required_depth() - 1;  // history depth g actually reads
  if (nu.depth < need)
    throw std::invalid_argument("adjoint_power: measure depth below memory");
  if (depth_cap < need + 1)
    throw std::invalid_argument("adjoint_power: cap below memory+1");
  const Alphabet& a = g.alphabet();
  CylinderMeasure cur = nu;
  Word full;
  for (int step = 0; step < n; ++step) {
    std::size_t old = cur.mass.size();
    CylinderMeasure next{a, cur.depth + 1,
                         std::vector<double>(old * std::size_t(a.size))};
    for (std::size_t i = 0; i < old; ++i) {
      Word w = word_at(a, i, cur.depth);
      full.assign(1, 0);
      full.insert(full.end(), w.begin(), w.end());
      for (Symbol s = 0; s < a.size; ++s) {
        full[0] = s;
        next.mass[std::size_t(s) * old + i] = eval_g(g, full) * cur.mass[i];
      }
    }
    if (next.depth > depth_cap) next = marginalize_last(next, next.depth - depth_cap);
    cur = std::move(next);
  }
  return cur;
}

// Stationary law of the finite-memory chain induced by a table g, returned
// at the requested cylinder depth (default: the memory).  Dense elimination
// while |S|^m <= 4096, power iteration above.
inline CylinderMeasure stationary_measure(const GFunction& g, int depth = -1) {
  if (g.kind() != GKind::table)
    throw std::invalid_argument(
        "stationary_measure: table kind only (iterate adjoint_power instead)");
  const Alphabet& a = g.alphabet();
  int m = g.memory();
  if (depth < 0) depth = m;
  std::size_t ns = word_count(a, m);

  // pi over m-words (prefix-ordered); transition (x_1..x_m) -> (x_0..x_{m-1})
  // with probability g(x_0 x_1 .. x_m).
  std::vector<double> pi(ns, 1.0 / double(ns));
  if (m == 0) {
    pi.assign(1, 1.0);
  } else if (ns <= 4096) {
    // Solve pi P = pi, sum pi = 1 by replacing one balance equation with the
    // normalization row and doing dense Gaussian elimination on (P^T - I).
    std::size_t dim = ns;
    std::vector<double> A(dim * dim, 0.0), rhs(dim, 0.0);
    Word full(std::size_t(m + 1), 0);
    for (std::size_t from = 0; from < ns; ++from) {
      Word state = word_at(a, from, m);
      std::copy(state.begin(), state.end(), full.begin() + 1);
      for (Symbol s = 0; s < a.size; ++s) {
        full[0] = s;
        Word to_w(full.begin(), full.begin() + m);
        std::size_t to = word_index(a, to_w);
        double p = eval_g(g, full);
        A[to * dim + from] += p;  // (P^T)[to][from]
      }
    }
    for (std::size_t i = 0; i < dim; ++i) A[i * dim + i] -= 1.0;
    for (std::size_t j = 0; j < dim; ++j) A[(dim - 1) * dim + j] = 1.0;
    rhs[dim - 1] = 1.0;
    // Gaussian elimination with partial pivoting.
    for (std::size_t col = 0; col < dim; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < dim; ++r)
        if (std::abs(A[r * dim + col]) > std::abs(A[piv * dim + col])) piv = r;
      if (piv != col) {
        for (std::size_t j = 0; j < dim; ++j)
          std::swap(A[piv * dim + j], A[col * dim + j]);
        std::swap(rhs[piv], rhs[col]);
      }
      double d = A[col * dim + col];
      if (std::abs(d) < 1e-300)
        throw std::runtime_error("stationary_measure: singular system");
      for (std::size_t r = 0; r < dim; ++r) {
        if (r == col) continue;
        double f = A[r * dim + col] / d;
        if (f == 0.0) continue;
        for (std::size_t j = col; j < dim; ++j) A[r * dim + j] -= f * A[col * dim + j];
        rhs[r] -= f * rhs[col];
      }
    }
    for (std::size_t i = 0; i < dim; ++i) pi[i] = rhs[i] / A[i * dim + i];
  } else {
    // Power iteration on pi P, tolerance 1e-13.
    std::vector<double> nxt(ns, 0.0);
    Word full(std::size_t(m + 1), 0);
    for (long iter = 0; iter < 1000000; ++iter) {
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (std::size_t from = 0; from < ns; ++from) {
        Word state = word_at(a, from, m);
        std::copy(state.begin(), state.end(), full.begin() + 1);
        for (Symbol s = 0; s < a.size; ++s) {
          full[0] = s;
          Word to_w(full.begin(), full.begin() + m);
          nxt[word_index(a, to_w)] += eval_g(g, full) * pi[from];
        }
      }
      double diff = 0.0;
      for (std::size_t i = 0; i < ns; ++i) diff += std::abs(nxt[i] - pi[i]);
      pi.swap(nxt);
      if (diff < 1e-13) break;
    }
  }

  // Extend to the requested depth: mu(w_0..w_{d-1}) = pi(w_{d-m}..w_{d-1})
  // times the g factors generating the earlier coordinates.
  if (depth < m) {
    CylinderMeasure base{a, m, pi};
    return marginalize_last(base, m - depth);
  }
  std::size_t n = word_count(a, depth);
  CylinderMeasure out{a, depth, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    Word w = word_at(a, i, depth);
    Word tail(w.end() - m, w.end());
    double p = m == 0 ? 1.0 : pi[word_index(a, tail)];
    for (int j = depth - m - 1; j >= 0; --j) {
      Word full(w.begin() + j, w.begin() + j + m + 1);
      p *= eval_g(g, full);
    }
    out.mass[i] = p;
  }
  return out;
}

}  // namespace gmeasure

#endif  // GMEASURE_MEASURES_HPP
