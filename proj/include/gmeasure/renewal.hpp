#ifndef GMEASURE_RENEWAL_HPP
#define GMEASURE_RENEWAL_HPP

// The dominating integer Markov chain Y_n, its renewal-equation
// description and the closed-form limit that equals delta_bar.
//
// Two deliberately different readings coexist here.  build_spec and
// renewal_exact follow the renewal bookkeeping verbatim (cycle length
// B_l, limit exactly delta_bar).  simulate_Y is the mechanical chain:
// its cycles take B_l + 1 steps because the crash step itself consumes
// time, so its true below-zero frequency is
//   (1 + sum b_l q_l) / (1 + sum b_l e^{-r_1-..-r_{l-1}})  <=  delta_bar.
// The discrepancy is surfaced, never reconciled.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "gmeasure/blockvar.hpp"
#include "gmeasure/core.hpp"

namespace gmeasure {

struct RenewalSpec {
  BlockVariationPair pair;
  std::vector<double> q;        // q_l = e^{-r_1-..-r_{l-1}} (1 - e^{-r_l})
  std::map<long, double> p;     // p_j on {B_1, ..., B_M}
  std::vector<double> a;        // a_0 .. a_{B_M}
  double expected_T1 = 0.0;     // sum b_l e^{-r_1-..-r_{l-1}}
  double sum_a = 0.0;           // 1 + sum b_l q_l
};

inline RenewalSpec build_spec(const BlockVariationPair& pair) {
  pair.validate();
  std::size_t M = pair.blocks.levels();
  if (M == 0) throw std::invalid_argument("build_spec: empty pair");
  RenewalSpec spec;
  spec.pair = pair;
  double prefix = 0.0;
  CompensatedSum et1, sum_bq;
  for (std::size_t l = 0; l < M; ++l) {
    double rl = std::max(pair.r[l], kDegenerateRate);
    double e_prefix = std::exp(-prefix);
    double ql = e_prefix * (-std::expm1(-rl));
    spec.q.push_back(ql);
    et1.add(double(pair.blocks.b[l]) * e_prefix);
    sum_bq.add(double(pair.blocks.b[l]) * ql);
    prefix += rl;
  }
  double qsum = 0.0;
  for (std::size_t l = 0; l + 1 < M; ++l) {
    spec.p[pair.blocks.B[l + 1]] += spec.q[l];
    qsum += spec.q[l];
  }
  spec.p[pair.blocks.B[M]] += 1.0 - qsum;

  spec.a.assign(std::size_t(pair.blocks.total()) + 1, 0.0);
  spec.a[0] = 1.0;
  for (std::size_t l = 0; l < M; ++l)
    for (long n = pair.blocks.B[l] + 1; n <= pair.blocks.B[l + 1]; ++n)
      spec.a[std::size_t(n)] = spec.q[l];

  spec.expected_T1 = et1.value();
  spec.sum_a = 1.0 + sum_bq.value();
  return spec;
}

struct RenewalSolution {
  std::vector<double> A;     // A_0 .. A_N from the recursion
  double limit = 0.0;        // sum_a / expected_T1 (== delta_bar)
  double tail_gap = 0.0;     // |window average of A near N - limit|
};

// Direct solution of A_n = a_n + sum_j A_{n-j} p_j.  The reported limit is
// the closed form; tail_gap averages the last B_M terms so that lattice
// periodicity (gcd of the support > 1) does not masquerade as
// non-convergence.
inline RenewalSolution renewal_exact(const RenewalSpec& spec, long N) {
  long BM = spec.pair.blocks.total();
  if (N < BM) throw std::invalid_argument("renewal_exact: N < B_M");
  RenewalSolution sol;
  sol.A.assign(std::size_t(N) + 1, 0.0);
  for (long n = 0; n <= N; ++n) {
    CompensatedSum s;
    if (n < long(spec.a.size())) s.add(spec.a[std::size_t(n)]);
    for (const auto& [j, pj] : spec.p)
      if (j <= n) s.add(sol.A[std::size_t(n - j)] * pj);
    sol.A[std::size_t(n)] = s.value();
  }
  sol.limit = spec.sum_a / spec.expected_T1;
  CompensatedSum w;
  for (long n = N - BM + 1; n <= N; ++n) w.add(sol.A[std::size_t(n)]);
  sol.tail_gap = std::abs(w.value() / double(BM) - sol.limit);
  return sol;
}

struct YTrace {
  std::vector<long> values;  // Y_0 .. Y_N
  std::uint64_t seed = 0;
  double below_zero_frequency = 0.0;  // over n = 1..N
};

// Mechanical simulation of the Y-chain: climb +1 off the branch grid, at
// B_{l-1} go up with probability e^{-r_l} and crash to -b_l otherwise, and
// reset to 0 from B_M.
inline YTrace simulate_Y(const BlockVariationPair& pair, long N,
                         std::uint64_t seed, bool keep_trace = true) {
  pair.validate();
  std::size_t M = pair.blocks.levels();
  if (N < 1) throw std::invalid_argument("simulate_Y: N must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::map<long, std::size_t> branch;  // B_{l-1} -> level index l-1
  for (std::size_t l = 0; l < M; ++l) branch[pair.blocks.B[l]] = l;
  long BM = pair.blocks.total();

  YTrace trace;
  trace.seed = seed;
  if (keep_trace) trace.values.reserve(std::size_t(N) + 1);
  long y = 0;
  long below = 0;
  if (keep_trace) trace.values.push_back(y);
  for (long n = 1; n <= N; ++n) {
    if (y == BM) {
      y = 0;
    } else if (auto it = branch.find(y); it != branch.end()) {
      std::size_t l = it->second;
      double rl = std::max(pair.r[l], kDegenerateRate);
      y = unif(rng) < std::exp(-rl) ? y + 1 : -pair.blocks.b[l];
    } else {
      ++y;
    }
    if (y <= 0) ++below;
    if (keep_trace) trace.values.push_back(y);
  }
  trace.below_zero_frequency = double(below) / double(N);
  return trace;
}

// The mechanical chain's true long-run below-zero frequency; always at most
// delta_bar because the crash step lengthens each cycle by one.
inline double simulated_below_zero_limit(const BlockVariationPair& pair) {
  RenewalSpec spec = build_spec(pair);
  return spec.sum_a / (1.0 + spec.expected_T1);
}

}  // namespace gmeasure

#endif  // GMEASURE_RENEWAL_HPP
