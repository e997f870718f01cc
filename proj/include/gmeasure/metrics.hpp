#ifndef GMEASURE_METRICS_HPP
#define GMEASURE_METRICS_HPP

// Probability metrics on block marginals and cylinder measures: total
// variation (L1 convention, range [0,2]), the Hellinger integral, the
// one-step affinity -log h(y,y~), the coefficient f(delta), exact maximal-
// coupling sampling, and the closed-form W1 distance for the ultrametric
// d(x,x~) = 2^{-kappa}.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "gmeasure/core.hpp"
#include "gmeasure/measures.hpp"
#include "gmeasure/symbolic.hpp"

namespace gmeasure {

struct CouplingSample {
  Word left;
  Word right;
  bool success = false;  // success <=> left == right
};

struct MetricReport {
  double tv = 0.0;           // in [0,2]
  double hellinger = 1.0;    // in [0,1]
  double success_prob = 1.0; // 1 - tv/2
};

inline void check_same_shape(const CylinderMeasure& a,
                             const CylinderMeasure& b) {
  if (!(a.alphabet == b.alphabet) || a.depth != b.depth)
    throw std::invalid_argument("metrics: shape mismatch");
}

inline double total_variation(const BlockMarginal& eta,
                              const BlockMarginal& eta2) {
  check_same_shape(eta, eta2);
  CompensatedSum s;
  for (std::size_t i = 0; i < eta.mass.size(); ++i)
    s.add(std::abs(eta.mass[i] - eta2.mass[i]));
  return s.value();
}

// H(eta, eta~) = sum_w sqrt(eta(w) eta~(w)).  The factors are rooted
// separately so masses below 1e-300 do not underflow the product.
inline double hellinger_integral(const BlockMarginal& eta,
                                 const BlockMarginal& eta2) {
  check_same_shape(eta, eta2);
  CompensatedSum s;
  for (std::size_t i = 0; i < eta.mass.size(); ++i)
    s.add(std::sqrt(eta.mass[i]) * std::sqrt(eta2.mass[i]));
  return std::min(s.value(), 1.0);
}

inline MetricReport metric_report(const BlockMarginal& eta,
                                  const BlockMarginal& eta2) {
  MetricReport r;
  r.tv = total_variation(eta, eta2);
  r.hellinger = hellinger_integral(eta, eta2);
  r.success_prob = 1.0 - r.tv / 2.0;
  return r;
}

// -log h(y, y~) with h(y, y~) = sum_alpha sqrt(g(alpha y) g(alpha y~)).
inline double one_step_h(const GFunction& g, const Word& y, const Word& y2) {
  const Alphabet& a = g.alphabet();
  Word xy(y.size() + 1), xy2(y2.size() + 1);
  std::copy(y.begin(), y.end(), xy.begin() + 1);
  std::copy(y2.begin(), y2.end(), xy2.begin() + 1);
  CompensatedSum s;
  for (Symbol al = 0; al < a.size; ++al) {
    xy[0] = al;
    xy2[0] = al;
    s.add(std::sqrt(eval_g(g, xy)) * std::sqrt(eval_g(g, xy2)));
  }
  return -std::log(std::min(s.value(), 1.0));
}

// f(delta) = delta^{-2} ( (1 + e^delta)/2 - e^{delta/2} ), extended by
// f(0) = 1/8.  Near zero the direct form cancels badly; use the series
// f(delta) = sum_{k>=2} delta^{k-2} (1/2 - 2^{-k}) / k!.
inline double f_delta(double d) {
  if (std::abs(d) < 0.5) {
    double term = 1.0;  // delta^{k-2} running power
    double fact = 2.0;  // k!
    double pow2 = 4.0;  // 2^k
    CompensatedSum s;
    for (int k = 2; k <= 30; ++k) {
      s.add(term * (0.5 - 1.0 / pow2) / fact);
      term *= d;
      fact *= double(k + 1);
      pow2 *= 2.0;
    }
    return s.value();
  }
  return (0.5 * (1.0 + std::exp(d)) - std::exp(d / 2.0)) / (d * d);
}

// Maximal coupling: with probability sum min draw a shared word from the
// normalized minimum measure, otherwise draw left and right independently
// from the normalized positive/negative residuals (disjoint supports, so
// agreement happens exactly with probability sum min).
inline CouplingSample sample_maximal_coupling(const BlockMarginal& eta,
                                              const BlockMarginal& eta2,
                                              std::mt19937_64& rng) {
  check_same_shape(eta, eta2);
  std::size_t n = eta.mass.size();
  double overlap = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    overlap += std::min(eta.mass[i], eta2.mass[i]);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto draw = [&](auto&& weight, double total) -> std::size_t {
    double u = unif(rng) * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double w = weight(i);
      if (w <= 0.0) continue;
      last = i;
      acc += w;
      if (u < acc) return i;
    }
    return last;  // guard against roundoff at the top end
  };

  CouplingSample out;
  if (unif(rng) < overlap) {
    std::size_t i = draw(
        [&](std::size_t k) { return std::min(eta.mass[k], eta2.mass[k]); },
        overlap);
    out.left = word_at(eta.alphabet, i, eta.depth);
    out.right = out.left;
    out.success = true;
    return out;
  }
  double res = 1.0 - overlap;
  std::size_t i = draw(
      [&](std::size_t k) { return std::max(eta.mass[k] - eta2.mass[k], 0.0); },
      res);
  std::size_t j = draw(
      [&](std::size_t k) { return std::max(eta2.mass[k] - eta.mass[k], 0.0); },
      res);
  out.left = word_at(eta.alphabet, i, eta.depth);
  out.right = word_at(eta2.alphabet, j, eta2.depth);
  out.success = out.left == out.right;
  return out;
}

// Exact W1 for the depth-n quotient of the 2^{-kappa} metric, via the tree
// closed form  W1 = sum_{k=1}^{n-1} 2^{-(k+1)} D_k + 2^{-n} D_n  with
// D_k the L1 distance between the depth-k marginals.  The untruncated
// space adds a resolution of at most 2^{-n}.
inline double wasserstein_ultra(const CylinderMeasure& mu,
                                const CylinderMeasure& nu) {
  check_same_shape(mu, nu);
  int n = mu.depth;
  if (n == 0) return 0.0;
  CylinderMeasure a = mu, b = nu;
  double w = std::ldexp(total_variation(a, b), -n);  // 2^{-n} D_n
  for (int k = n - 1; k >= 1; --k) {
    a = marginalize_last(a, 1);
    b = marginalize_last(b, 1);
    w += std::ldexp(total_variation(a, b), -(k + 1));
  }
  return w;
}

}  // namespace gmeasure

#endif  // GMEASURE_METRICS_HPP
