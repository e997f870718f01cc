#ifndef GMEASURE_COUPLING_HPP
#define GMEASURE_COUPLING_HPP

// Block-coupled simulation of two g-chains dominated by the Y-chain,
// empirical d-bar estimation against the delta_bar ceiling, and the
// attractiveness experiment for iterates of the adjoint operator.
//
// One shared uniform drives both the Y-transition and the block success:
// the block succeeds iff U < p_actual and Y climbs iff U < e^{-(r_l + s b_l)}.
// Under validity p_actual >= e^{-(r_l + s b_l)}, so a Y-climb implies block
// success and kappa >= Y_n at every step.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "gmeasure/blockvar.hpp"
#include "gmeasure/core.hpp"
#include "gmeasure/measures.hpp"
#include "gmeasure/metrics.hpp"
#include "gmeasure/symbolic.hpp"

namespace gmeasure {

// || log g - log g~ ||_inf, exact for table pairs, a certified upper bound
// (including truncation slack) when a logistic kernel is involved.
inline double sup_log_gap(const GFunction& g, const GFunction& g2) {
  if (!(g.alphabet() == g2.alphabet()))
    throw std::invalid_argument("sup_log_gap: alphabet mismatch");
  int d = std::max(g.required_depth(), g2.required_depth());
  std::size_t n = word_count(g.alphabet(), d);
  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Word w = word_at(g.alphabet(), i, d);
    sup = std::max(sup,
                   std::abs(std::log(eval_g(g, w)) - std::log(eval_g(g2, w))));
  }
  return sup + g.truncation_slack() + g2.truncation_slack();
}

struct CoupledState {
  Word left_past;
  Word right_past;
  long kappa = 0;  // exact concordance of the (unbounded) pasts
  long y = 0;
  std::size_t level = 0;   // 1-based level of the last branch taken
  double s = 0.0;          // sup-log gap between the two kernels
};

struct ExtensionResult {
  bool success = false;
  double p_actual = 0.0;
};

namespace detail {

// Cap stored pasts: coordinates beyond what either kernel reads are inert.
inline void trim_past(Word& past, std::size_t keep) {
  if (past.size() > keep) past.resize(keep);
}

inline void prepend_pair(CoupledState& st, Symbol a, Symbol b,
                         std::size_t keep) {
  st.left_past.insert(st.left_past.begin(), a);
  st.right_past.insert(st.right_past.begin(), b);
  trim_past(st.left_past, keep);
  trim_past(st.right_past, keep);
  st.kappa = a == b ? st.kappa + 1 : 0;
}

}  // namespace detail

struct BlockPair {
  Word left;   // sampled block in prepend order (y_1 first)
  Word right;
  bool success = false;
  double p_actual = 0.0;
};

// Sample one maximally coupled block pair from the two block marginals.
// When shared_u is supplied the success event is {*shared_u < p_actual}, so
// it can be monotonically coupled with the Y-transition; the word draws use
// fresh randomness either way.
inline BlockPair sample_block_pair(const GFunction& g, const GFunction& g2,
                                   const CoupledState& state, int b,
                                   std::mt19937_64& rng,
                                   const double* shared_u = nullptr) {
  if (b < 1) throw std::invalid_argument("sample_block_pair: b >= 1");
  BlockMarginal eta = block_marginal(g, state.left_past, b);
  BlockMarginal eta2 = block_marginal(g2, state.right_past, b);
  double overlap = 0.0;
  for (std::size_t i = 0; i < eta.mass.size(); ++i)
    overlap += std::min(eta.mass[i], eta2.mass[i]);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = shared_u ? *shared_u : unif(rng);
  BlockPair res;
  res.p_actual = overlap;
  res.success = u < overlap;

  auto draw = [&](auto&& weight, double total) -> Word {
    double t = unif(rng) * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < eta.mass.size(); ++i) {
      double w = weight(i);
      if (w <= 0.0) continue;
      last = i;
      acc += w;
      if (t < acc) return word_at(eta.alphabet, i, b);
    }
    return word_at(eta.alphabet, last, b);
  };

  if (res.success) {
    res.left = draw(
        [&](std::size_t k) { return std::min(eta.mass[k], eta2.mass[k]); },
        overlap);
    res.right = res.left;
  } else {
    double resmass = 1.0 - overlap;
    res.left = draw(
        [&](std::size_t k) { return std::max(eta.mass[k] - eta2.mass[k], 0.0); },
        resmass);
    res.right = draw(
        [&](std::size_t k) { return std::max(eta2.mass[k] - eta.mass[k], 0.0); },
        resmass);
  }
  return res;
}

// Extend both chains in place by a length-b block under the maximal
// coupling.  On success kappa grows by b; on failure it is recomputed from
// the actually sampled words.
inline ExtensionResult coupled_block_extension(const GFunction& g,
                                               const GFunction& g2,
                                               CoupledState& state, int b,
                                               std::mt19937_64& rng,
                                               const double* shared_u = nullptr) {
  BlockPair bp = sample_block_pair(g, g2, state, b, rng, shared_u);
  std::size_t keep =
      std::size_t(std::max(g.required_depth(), g2.required_depth()) + 2) +
      std::size_t(b);
  for (int i = 0; i < b; ++i)
    detail::prepend_pair(state, bp.left[std::size_t(i)], bp.right[std::size_t(i)],
                         keep);
  return {bp.success, bp.p_actual};
}

struct CouplingTraceStep {
  long n = 0;
  long kappa = 0;
  long y = 0;
  bool disagree = false;  // kappa == 0 at this step
};

struct CouplingTrace {
  std::vector<CouplingTraceStep> steps;  // empty when records are off
  std::vector<long> level_successes;
  std::vector<long> level_failures;
  long validity_violations = 0;   // steps with p_actual < e^{-(r_l + s b_l)}
  long dominance_failures = 0;    // kappa < y at a non-withdrawn step
  long tail_disagree = 0;         // kappa == 0 count over the last 10%
  long tail_steps = 0;
  long horizon = 0;
  double s = 0.0;
};

enum class InitialPasts { adversarial, uniform, stationary };

namespace detail {

inline Word initial_word(const GFunction& g, InitialPasts kind, Symbol lead,
                         std::size_t depth, std::mt19937_64& rng) {
  Word w(depth, 0);
  switch (kind) {
    case InitialPasts::adversarial:
      w[0] = lead;
      break;
    case InitialPasts::uniform: {
      std::uniform_int_distribution<int> d(0, g.alphabet().size - 1);
      for (auto& s : w) s = d(rng);
      break;
    }
    case InitialPasts::stationary: {
      CylinderMeasure mu = stationary_measure(g, int(depth));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double t = u(rng), acc = 0.0;
      for (std::size_t i = 0; i < mu.mass.size(); ++i) {
        acc += mu.mass[i];
        if (t < acc || i + 1 == mu.mass.size())
          return word_at(mu.alphabet, i, mu.depth);
      }
      break;
    }
  }
  return w;
}

}  // namespace detail

// Run the joint construction for `horizon` steps.  Block extensions are
// executed exactly when Y sits on a branch point B_{l-1}; the single step
// the Y-chain spends returning from -1 to 0 after a crash (and the reset
// step from B_M) extends both chains with a one-step maximal coupling.
inline CouplingTrace run_coupling(const GFunction& g, const GFunction& g2,
                                  const BlockVariationPair& pair, long horizon,
                                  std::uint64_t seed,
                                  InitialPasts initial = InitialPasts::adversarial,
                                  bool keep_records = true) {
  pair.validate();
  std::size_t M = pair.blocks.levels();
  if (M == 0) throw std::invalid_argument("run_coupling: empty pair");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double s = sup_log_gap(g, g2);
  std::size_t depth =
      std::size_t(std::max(g.required_depth(), g2.required_depth()));
  CoupledState st;
  st.left_past = detail::initial_word(g, initial, 1, depth, rng);
  st.right_past = detail::initial_word(g2, initial, 0, depth, rng);
  st.kappa = concordance(st.left_past, st.right_past);
  st.s = s;

  CouplingTrace trace;
  trace.horizon = horizon;
  trace.s = s;
  trace.level_successes.assign(M, 0);
  trace.level_failures.assign(M, 0);
  if (keep_records) trace.steps.reserve(std::size_t(horizon));
  long tail_from = horizon - horizon / 10 + 1;

  auto branch_level = [&](long y) -> long {
    for (std::size_t l = 0; l < M; ++l)
      if (pair.blocks.B[l] == y) return long(l);
    return -1;
  };

  Word queue_l, queue_r;  // pending block symbols in prepend order
  std::size_t queue_pos = 0;
  bool claim_withdrawn = false;
  std::size_t keep =
      std::size_t(std::max(g.required_depth(), g2.required_depth()) + 2);

  for (long n = 1; n <= horizon; ++n) {
    // Y transition.
    long lvl = -1;
    if (st.y == pair.blocks.total()) {
      st.y = 0;
    } else if ((lvl = branch_level(st.y)) >= 0) {
      std::size_t l = std::size_t(lvl);
      int bl = int(pair.blocks.b[l]);
      double r_infl = std::max(pair.r[l] + s * double(bl), kDegenerateRate);
      double u = unif(rng);
      bool climb = u < std::exp(-r_infl);
      BlockPair bp = sample_block_pair(g, g2, st, bl, rng, &u);
      if (bp.p_actual < std::exp(-r_infl)) {
        ++trace.validity_violations;
        claim_withdrawn = true;
      }
      (bp.success ? trace.level_successes : trace.level_failures)[l] += 1;
      st.level = l + 1;
      st.y = climb ? st.y + 1 : -pair.blocks.b[l];
      queue_l = bp.left;
      queue_r = bp.right;
      queue_pos = 0;
    } else {
      ++st.y;
    }

    // Chain extension for this step.
    if (queue_pos < queue_l.size()) {
      detail::prepend_pair(st, queue_l[queue_pos], queue_r[queue_pos], keep);
      ++queue_pos;
    } else {
      coupled_block_extension(g, g2, st, 1, rng);
    }

    bool disagree = st.kappa == 0;
    if (st.kappa < st.y && !claim_withdrawn) ++trace.dominance_failures;
    if (n >= tail_from) {
      ++trace.tail_steps;
      if (disagree) ++trace.tail_disagree;
    }
    if (keep_records)
      trace.steps.push_back({n, st.kappa, st.y, disagree});
  }
  return trace;
}

struct DbarEstimate {
  double estimate = 0.0;   // mean tail disagreement frequency over trials
  double band = 0.0;       // 3 sigma of the trial mean
  double ceiling = 0.0;    // delta_bar({r_l + s b_l}, {b_l})
  double s = 0.0;
  long trials = 0;
  long validity_violations = 0;
};

// Trials run on derived seeds (master ^ index) and merge by trial index, so
// the result is identical for any thread count.
inline DbarEstimate estimate_dbar(const GFunction& g, const GFunction& g2,
                                  const BlockVariationPair& pair, long horizon,
                                  long trials, std::uint64_t master_seed,
                                  InitialPasts initial = InitialPasts::adversarial,
                                  unsigned threads = 1) {
  if (trials < 1) throw std::invalid_argument("estimate_dbar: trials >= 1");
  double s = sup_log_gap(g, g2);
  std::vector<double> freqs(std::size_t(trials), 0.0);
  std::vector<long> viol(std::size_t(trials), 0);
  auto run_trial = [&](long k) {
    CouplingTrace t = run_coupling(g, g2, pair, horizon,
                                   master_seed ^ std::uint64_t(k), initial,
                                   /*keep_records=*/false);
    freqs[std::size_t(k)] =
        t.tail_steps > 0 ? double(t.tail_disagree) / double(t.tail_steps) : 0.0;
    viol[std::size_t(k)] = t.validity_violations;
  };
  if (threads <= 1) {
    for (long k = 0; k < trials; ++k) run_trial(k);
  } else {
    std::vector<std::thread> pool;
    std::atomic<long> next{0};
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (long k = next.fetch_add(1); k < trials; k = next.fetch_add(1))
          run_trial(k);
      });
    for (auto& th : pool) th.join();
  }
  long violations = 0;
  for (long v : viol) violations += v;
  double mean = 0.0;
  for (double f : freqs) mean += f;
  mean /= double(trials);
  double var = 0.0;
  for (double f : freqs) var += (f - mean) * (f - mean);
  var = trials > 1 ? var / double(trials - 1) : 0.0;

  BlockVariationPair inflated = pair;
  for (std::size_t l = 0; l < pair.blocks.levels(); ++l)
    inflated.r[l] += s * double(pair.blocks.b[l]);

  DbarEstimate out;
  out.estimate = mean;
  out.band = 3.0 * std::sqrt(var / double(trials));
  out.ceiling = delta_bar(inflated);
  out.s = s;
  out.trials = trials;
  out.validity_violations = violations;
  return out;
}

struct AttractorSeries {
  std::vector<double> distances;  // d_W(L*^n nu1, L*^n nu2), n = 1..n_max
  double resolution = 0.0;        // 2^{-depth_cap} truncation term
};

inline AttractorSeries iterate_attractor(const GFunction& g,
                                         const CylinderMeasure& nu1,
                                         const CylinderMeasure& nu2, int n_max,
                                         int depth_cap = 20) {
  AttractorSeries out;
  out.resolution = std::ldexp(1.0, -depth_cap);
  CylinderMeasure a = nu1, b = nu2;
  for (int n = 1; n <= n_max; ++n) {
    a = adjoint_power(g, a, 1, depth_cap);
    b = adjoint_power(g, b, 1, depth_cap);
    out.distances.push_back(wasserstein_ultra(a, b));
  }
  return out;
}

}  // namespace gmeasure

#endif  // GMEASURE_COUPLING_HPP
