#ifndef GMEASURE_BLOCKVAR_HPP
#define GMEASURE_BLOCKVAR_HPP

// Block structures and block-variation pairs, the closed-form ceiling
// delta_bar, the Hellinger and coupling block-variations h^g and rho^g
// with their bound chain, per-level validity, block construction
// strategies and the finite-horizon condition checkers.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmeasure/core.hpp"
#include "gmeasure/measures.hpp"
#include "gmeasure/metrics.hpp"
#include "gmeasure/symbolic.hpp"

namespace gmeasure {

struct BlockStructure {
  std::vector<long> b;  // block lengths b_1..b_M
  std::vector<long> B;  // cumulative B_0=0, B_1, ..., B_M

  explicit BlockStructure(std::vector<long> lengths = {}) {
    B.push_back(0);
    for (long x : lengths) {
      if (x < 1) throw std::invalid_argument("BlockStructure: b_l must be >= 1");
      B.push_back(B.back() + x);
    }
    b = std::move(lengths);
  }
  std::size_t levels() const { return b.size(); }
  long total() const { return B.back(); }
};

enum class RateProvenance { from_rho, from_s, manual };

struct BlockVariationPair {
  BlockStructure blocks;
  std::vector<double> r;  // rates r_1..r_M, positive
  std::vector<double> s;  // optional: the s_l behind from_s rates
  RateProvenance provenance = RateProvenance::manual;

  void validate() const {
    if (r.size() != blocks.levels())
      throw std::invalid_argument("BlockVariationPair: length mismatch");
    for (double v : r)
      if (!(v >= 0.0)) throw std::invalid_argument("BlockVariationPair: r_l < 0");
  }
};

// Zero rates are substituted by this value inside delta_bar to keep the
// degenerate all-zero case well defined.
inline constexpr double kDegenerateRate = 1e-15;

// delta_bar over the first `levels` levels (all of them by default):
//   (1 + sum b_l e^{-r_1-..-r_{l-1}} (1 - e^{-r_l})) / (sum b_l e^{-r_1-..-r_{l-1}})
inline double delta_bar(const BlockVariationPair& pair, std::size_t levels = 0) {
  pair.validate();
  std::size_t M = pair.blocks.levels();
  if (M == 0) throw std::invalid_argument("delta_bar: empty pair");
  if (levels == 0 || levels > M) levels = M;
  double prefix = 0.0;  // r_1 + ... + r_{l-1}
  CompensatedSum num, den;
  for (std::size_t l = 0; l < levels; ++l) {
    double rl = std::max(pair.r[l], kDegenerateRate);
    double e_prefix = std::exp(-prefix);
    double bl = double(pair.blocks.b[l]);
    num.add(bl * e_prefix * (-std::expm1(-rl)));
    den.add(bl * e_prefix);
    prefix += rl;
  }
  return (1.0 + num.value()) / den.value();
}

// Rates from the variation sequence:
//   s_l = sum_{k=B_{l-1}}^{B_l - 1} (1/8) var_k^2,   r_l = sqrt(2 s_l) + 2 s_l.
inline BlockVariationPair r_from_variations(const VariationSequence& vars,
                                            const BlockStructure& blocks) {
  if (long(vars.values.size()) < blocks.total())
    throw std::invalid_argument("r_from_variations: variation data too short");
  BlockVariationPair pair;
  pair.blocks = blocks;
  pair.provenance = RateProvenance::from_s;
  for (std::size_t l = 0; l < blocks.levels(); ++l) {
    CompensatedSum s;
    for (long k = blocks.B[l]; k < blocks.B[l + 1]; ++k)
      s.add(0.125 * vars.values[std::size_t(k)] * vars.values[std::size_t(k)]);
    double sl = s.value();
    pair.s.push_back(sl);
    pair.r.push_back(std::sqrt(2.0 * sl) + 2.0 * sl);
  }
  return pair;
}

namespace detail {

// Enumerate pairs of truncated pasts agreeing in the first B coordinates
// and hand both to fn.  The past depth is whatever the kernel actually
// reads, so the sup over these pairs is the sup over all admissible pasts
// of the (truncated) kernel.
template <typename Fn>
void for_each_past_pair(const GFunction& g, int B, Fn&& fn) {
  const Alphabet& a = g.alphabet();
  int hist = g.required_depth() - 1;
  int d = std::max(B, hist);
  if (B >= d) return;  // identical laws only
  std::size_t shared = word_count(a, B);
  std::size_t free_part = word_count(a, d - B);
  Word y(std::size_t(d), 0), y2(std::size_t(d), 0);
  for (std::size_t s = 0; s < shared; ++s) {
    Word pre = word_at(a, s, B);
    std::copy(pre.begin(), pre.end(), y.begin());
    std::copy(pre.begin(), pre.end(), y2.begin());
    for (std::size_t i = 0; i < free_part; ++i) {
      Word ti = word_at(a, i, d - B);
      std::copy(ti.begin(), ti.end(), y.begin() + B);
      for (std::size_t j = i + 1; j < free_part; ++j) {
        Word tj = word_at(a, j, d - B);
        std::copy(tj.begin(), tj.end(), y2.begin() + B);
        fn(y, y2);
      }
    }
  }
}

}  // namespace detail

// Hellinger block-variation h^g(B,b) = sup -log H(eta, eta^) over past
// pairs with concordance >= B.  Exact for table kind (0 once B reaches the
// memory); for the logistic kind the truncated sup is inflated by the
// certified per-evaluation slack, b evaluations per product.
inline double h_block(const GFunction& g, int B, int b) {
  if (b <= 0) throw std::invalid_argument("h_block: b must be >= 1");
  if (B < 0) throw std::invalid_argument("h_block: B must be >= 0");
  double sup = 0.0;
  detail::for_each_past_pair(g, B, [&](const Word& y, const Word& y2) {
    BlockMarginal eta = block_marginal(g, y, b);
    BlockMarginal eta2 = block_marginal(g, y2, b);
    sup = std::max(sup, -std::log(hellinger_integral(eta, eta2)));
  });
  return sup + double(b) * g.truncation_slack();
}

struct RhoBlock {
  double exact = 0.0;       // sup -log sum_w min(eta, eta^)  (plus slack)
  double bound_log = 0.0;   // -log(1 - sqrt(1 - e^{-2h}))
  double bound_sqrt = 0.0;  // sqrt(2h) + 2h
  double bound_w = 0.0;     // (1/2) w, carries the (1+O(w)) caveat
  bool bound_w_caveat = true;
};

inline RhoBlock rho_block(const GFunction& g, int B, int b) {
  if (b <= 0) throw std::invalid_argument("rho_block: b must be >= 1");
  if (B < 0) throw std::invalid_argument("rho_block: B must be >= 0");
  RhoBlock out;
  double sup = 0.0;
  detail::for_each_past_pair(g, B, [&](const Word& y, const Word& y2) {
    BlockMarginal eta = block_marginal(g, y, b);
    BlockMarginal eta2 = block_marginal(g, y2, b);
    CompensatedSum overlap;
    for (std::size_t i = 0; i < eta.mass.size(); ++i)
      overlap.add(std::min(eta.mass[i], eta2.mass[i]));
    sup = std::max(sup, -std::log(std::min(overlap.value(), 1.0)));
  });
  double slack = double(b) * g.truncation_slack();
  out.exact = sup + slack;
  double h = h_block(g, B, b);
  if (h > 0.0) {
    out.bound_log = -std::log1p(-std::sqrt(-std::expm1(-2.0 * h)));
    out.bound_sqrt = std::sqrt(2.0 * h) + 2.0 * h;
  }
  // Conservative inclusive range k = B .. B+b for the w bound.
  CompensatedSum w2;
  for (int k = B; k <= B + b; ++k) {
    double v = variation(g, k).value;
    w2.add(v * v);
  }
  out.bound_w = 0.5 * std::sqrt(w2.value());
  return out;
}

struct ValidityReport {
  std::vector<double> rho;     // rho^g(B_{l-1}, b_l) per level
  std::vector<bool> valid;     // r_l >= rho_l
  std::size_t first_all_valid; // 1-based l0 with all levels >= l0 valid
  bool all_valid;
};

inline ValidityReport validity_report(const GFunction& g,
                                      const BlockVariationPair& pair) {
  pair.validate();
  ValidityReport rep;
  for (std::size_t l = 0; l < pair.blocks.levels(); ++l) {
    double rho = rho_block(g, int(pair.blocks.B[l]), int(pair.blocks.b[l])).exact;
    rep.rho.push_back(rho);
    rep.valid.push_back(pair.r[l] >= rho);
  }
  std::size_t l0 = 1;
  for (std::size_t l = 0; l < rep.valid.size(); ++l)
    if (!rep.valid[l]) l0 = l + 2;
  rep.first_all_valid = l0;
  rep.all_valid = l0 == 1;
  return rep;
}

// ---------------------------------------------------------------------------
// Variation models: closed-form decay families with certified square tails,
// plus explicit sequences.

class VariationModel {
 public:
  // var_n = K * max(n,1)^{-alpha}
  static VariationModel power(double K, double alpha) {
    VariationModel m;
    m.kind_ = Kind::power;
    m.K_ = K;
    m.alpha_ = alpha;
    return m;
  }
  // var_n = K * gamma^n, 0 < gamma < 1
  static VariationModel geometric(double K, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
      throw std::invalid_argument("VariationModel: gamma in (0,1)");
    VariationModel m;
    m.kind_ = Kind::geometric;
    m.K_ = K;
    m.gamma_ = gamma;
    return m;
  }
  // Explicit values; zero_beyond means var_n = 0 past the array (exact
  // tails), otherwise no tail certificate is available.
  static VariationModel explicit_seq(VariationSequence vs, bool zero_beyond) {
    VariationModel m;
    m.kind_ = Kind::explicit_seq;
    m.seq_ = std::move(vs);
    m.zero_beyond_ = zero_beyond;
    return m;
  }

  double value(long n) const {
    switch (kind_) {
      case Kind::power:
        return K_ * std::pow(double(std::max(n, 1L)), -alpha_);
      case Kind::geometric:
        return K_ * std::pow(gamma_, double(n));
      case Kind::explicit_seq:
        if (n < long(seq_.values.size())) return seq_.values[std::size_t(n)];
        if (zero_beyond_) return 0.0;
        throw std::invalid_argument("VariationModel: value beyond data");
    }
    return 0.0;
  }

  // Certified upper bound on sum_{n >= B} var_n^2, when one exists.
  std::optional<double> sq_tail(long B) const {
    switch (kind_) {
      case Kind::power: {
        if (!(2.0 * alpha_ > 1.0)) return std::nullopt;
        double lo = double(std::max(B, 1L));
        double tail = K_ * K_ *
                      (std::pow(lo, -2.0 * alpha_) +
                       std::pow(lo, 1.0 - 2.0 * alpha_) / (2.0 * alpha_ - 1.0));
        if (B <= 0) tail += K_ * K_;  // the n = 0 term
        return tail;
      }
      case Kind::geometric: {
        double g2 = gamma_ * gamma_;
        return K_ * K_ * std::pow(g2, double(std::max(B, 0L))) / (1.0 - g2);
      }
      case Kind::explicit_seq: {
        if (!zero_beyond_) return std::nullopt;
        CompensatedSum s;
        for (long n = std::max(B, 0L); n < long(seq_.values.size()); ++n)
          s.add(value(n) * value(n));
        return s.value();
      }
    }
    return std::nullopt;
  }

  VariationSequence sequence(long n_max) const {
    VariationSequence vs;
    for (long n = 0; n <= n_max; ++n) {
      vs.values.push_back(value(n));
      vs.provenance.push_back(kind_ == Kind::explicit_seq
                                  ? Provenance::exact
                                  : Provenance::exact);
    }
    return vs;
  }

 private:
  enum class Kind { power, geometric, explicit_seq };
  VariationModel() = default;
  Kind kind_ = Kind::power;
  double K_ = 0.0, alpha_ = 1.0, gamma_ = 0.5;
  VariationSequence seq_;
  bool zero_beyond_ = false;
};

enum class BlockStrategy { geometric, tail, unit, manual };

// Block construction.  geometric: B_l = ceil(c^l / (c-1));  tail: smallest
// B > B_{l-1} with sq_tail(B) <= L / 2^l;  unit: b_l = 1.
inline BlockStructure make_blocks(BlockStrategy strategy, double c,
                                  const VariationModel& vars, std::size_t M) {
  std::vector<long> b;
  switch (strategy) {
    case BlockStrategy::geometric: {
      if (!(c > 1.0)) throw std::invalid_argument("make_blocks: need c > 1");
      long prev = 0;
      for (std::size_t l = 1; l <= M; ++l) {
        long B = long(std::ceil(std::pow(c, double(l)) / (c - 1.0)));
        if (B <= prev) B = prev + 1;
        b.push_back(B - prev);
        prev = B;
      }
      break;
    }
    case BlockStrategy::tail: {
      auto L = vars.sq_tail(0);
      if (!L) throw std::invalid_argument(
          "make_blocks: tail strategy needs a summable var^2 model");
      long prev = 0;
      for (std::size_t l = 1; l <= M; ++l) {
        long B = prev + 1;
        double target = *L / std::pow(2.0, double(l));
        while (*vars.sq_tail(B) > target) ++B;
        b.push_back(B - prev);
        prev = B;
      }
      break;
    }
    case BlockStrategy::unit:
      b.assign(M, 1);
      break;
    case BlockStrategy::manual:
      throw std::invalid_argument("make_blocks: manual blocks are given directly");
  }
  return BlockStructure(std::move(b));
}

// ---------------------------------------------------------------------------
// Finite-horizon condition checkers.

enum class VerdictStatus { holds_at_horizon, fails, inconclusive };

struct ConditionVerdict {
  VerdictStatus status = VerdictStatus::inconclusive;
  long horizon = 0;
  std::vector<std::pair<std::string, double>> witness;
  std::string violated;  // set when status == fails

  double witness_value(const std::string& key) const {
    for (const auto& [k, v] : witness)
      if (k == key) return v;
    throw std::invalid_argument("ConditionVerdict: no witness " + key);
  }
};

namespace detail {

struct SeriesProbe {
  double partial = 0.0;
  double inc_last = 0.0;   // gain over the last decade (N/10, N]
  double inc_prev = 0.0;   // gain over the decade before
  bool divergent = false;
};

// Horizon protocol for divergence: partial sums past the threshold, or the
// decade-increment ratio staying at 1-ish (>= ratio_floor), consistent with
// at least logarithmic growth.
template <typename TermFn>
SeriesProbe probe_series(TermFn&& term, long N, double threshold = 1e3,
                         double ratio_floor = 0.9) {
  SeriesProbe p;
  CompensatedSum s;
  long d1 = N / 10, d2 = N / 100;
  double at_d2 = 0.0, at_d1 = 0.0;
  for (long n = 1; n <= N; ++n) {
    s.add(term(n));
    if (n == d2) at_d2 = s.value();
    if (n == d1) at_d1 = s.value();
  }
  p.partial = s.value();
  p.inc_last = p.partial - at_d1;
  p.inc_prev = at_d1 - at_d2;
  p.divergent = p.partial > threshold ||
                (p.inc_prev > 0.0 && p.inc_last > 0.0 &&
                 p.inc_last / p.inc_prev >= ratio_floor);
  return p;
}

}  // namespace detail

enum class ConditionKind { square, berbee_eps, main };

struct ConditionParams {
  double epsilon = 0.0;          // berbee_eps
  double divergence_threshold = 1e3;
  double ratio_floor = 0.9;
  double tail_tolerance = 1e-6;  // convergence certificates
};

// Condition (1): summability of var_n^2.  holds == convergent, certified by
// a closed-form tail bound; the certificate point may lie beyond the horizon
// since the bound is evaluated in closed form.
inline ConditionVerdict check_square(const VariationModel& vars,
                                     const ConditionParams& prm, long N) {
  ConditionVerdict v;
  v.horizon = N;
  CompensatedSum s;
  for (long n = 1; n <= N; ++n) s.add(vars.value(n) * vars.value(n));
  v.witness.emplace_back("partial_sum", s.value());
  auto tail = vars.sq_tail(N + 1);
  if (tail) {
    v.witness.emplace_back("tail_bound", *tail);
    v.status = VerdictStatus::holds_at_horizon;
    return v;
  }
  auto probe = detail::probe_series(
      [&](long n) { return vars.value(n) * vars.value(n); }, N,
      prm.divergence_threshold, prm.ratio_floor);
  v.witness.emplace_back("decade_ratio",
                         probe.inc_prev > 0 ? probe.inc_last / probe.inc_prev : 0.0);
  if (probe.divergent) {
    v.status = VerdictStatus::fails;
    v.violated = "sum var_n^2 diverges at horizon";
  } else {
    v.status = VerdictStatus::inconclusive;
  }
  return v;
}

// Condition (2): divergence of sum e^{-(1/2+eps)(var_1+..+var_n)}.
inline ConditionVerdict check_berbee(const VariationModel& vars,
                                     const ConditionParams& prm, long N) {
  ConditionVerdict v;
  v.horizon = N;
  double cum = 0.0;
  CompensatedSum s;
  long d1 = N / 10, d2 = N / 100;
  double at_d1 = 0.0, at_d2 = 0.0;
  double last_term = 0.0, term_at_d1 = 0.0;
  for (long n = 1; n <= N; ++n) {
    cum += vars.value(n);
    last_term = std::exp(-(0.5 + prm.epsilon) * cum);
    s.add(last_term);
    if (n == d2) at_d2 = s.value();
    if (n == d1) {
      at_d1 = s.value();
      term_at_d1 = last_term;
    }
  }
  double inc_last = s.value() - at_d1, inc_prev = at_d1 - at_d2;
  v.witness.emplace_back("partial_sum", s.value());
  v.witness.emplace_back("decade_ratio", inc_prev > 0 ? inc_last / inc_prev : 0.0);
  bool divergent = s.value() > prm.divergence_threshold ||
                   (inc_prev > 0 && inc_last / inc_prev >= prm.ratio_floor);
  if (divergent) {
    v.status = VerdictStatus::holds_at_horizon;
    return v;
  }
  // Geometric tail certificate: a variation floor over the last decade makes
  // the terms decay at least geometrically.
  double vfloor = vars.value(N);
  for (long n = std::max(d1, 1L); n <= N; n += std::max((N - d1) / 64, 1L))
    vfloor = std::min(vfloor, vars.value(n));
  if (vfloor > 0.0) {
    double q = std::exp(-(0.5 + prm.epsilon) * vfloor);
    double remainder = last_term * q / (1.0 - q);
    v.witness.emplace_back("tail_bound", remainder);
    if (remainder < prm.tail_tolerance) {
      v.status = VerdictStatus::fails;
      v.violated = "series converges (geometric tail certificate)";
      return v;
    }
  }
  v.status = VerdictStatus::inconclusive;
  return v;
}

// The main condition: limsup r_l = 0 and divergence of the level sums.
// Both exponent variants are reported: through r_l (the main theorem) and
// through r_{l-1} (the eventual-validity variant); they differ per term by
// e^{-r_l} and never change a divergence verdict when limsup r_l = 0.
inline ConditionVerdict check_main(const BlockVariationPair& pair,
                                   const ConditionParams& prm) {
  pair.validate();
  ConditionVerdict v;
  std::size_t M = pair.blocks.levels();
  v.horizon = long(M);
  if (M == 0) throw std::invalid_argument("check_main: empty pair");

  CompensatedSum sum_incl, sum_prefix;
  double prefix = 0.0;
  std::size_t d1 = M / 10 > 0 ? M / 10 * 9 : M - 1;  // last decade of levels
  double incl_at_d1 = 0.0, prefix_at_d1 = 0.0;
  double limsup_tail = 0.0;
  for (std::size_t l = 0; l < M; ++l) {
    double bl = double(pair.blocks.b[l]);
    sum_prefix.add(bl * std::exp(-prefix));
    prefix += pair.r[l];
    sum_incl.add(bl * std::exp(-prefix));
    if (l + 1 == d1) {
      incl_at_d1 = sum_incl.value();
      prefix_at_d1 = sum_prefix.value();
    }
    if (l >= d1) limsup_tail = std::max(limsup_tail, pair.r[l]);
  }
  double incl_inc = sum_incl.value() - incl_at_d1;
  double prefix_inc = sum_prefix.value() - prefix_at_d1;
  // A per-level floor on the late terms is consistent with at least linear
  // growth of the level sums.
  double last_term = double(pair.blocks.b[M - 1]) * std::exp(-prefix);
  bool incl_div = sum_incl.value() > prm.divergence_threshold ||
                  (incl_inc > 0.0 && last_term >= 1e-3);
  bool prefix_div = sum_prefix.value() > prm.divergence_threshold ||
                    (prefix_inc > 0.0 &&
                     double(pair.blocks.b[M - 1]) *
                             std::exp(-(prefix - pair.r[M - 1])) >=
                         1e-3);
  v.witness.emplace_back("sum_through_r_l", sum_incl.value());
  v.witness.emplace_back("sum_through_r_lminus1", sum_prefix.value());
  v.witness.emplace_back("sum_divergent", incl_div ? 1.0 : 0.0);
  v.witness.emplace_back("sum_prefix_divergent", prefix_div ? 1.0 : 0.0);
  v.witness.emplace_back("limsup_r_tail", limsup_tail);
  v.witness.emplace_back("last_term", last_term);
  if (incl_div) {
    v.status = VerdictStatus::holds_at_horizon;
  } else if (sum_incl.value() < prm.divergence_threshold && last_term < 1e-12) {
    v.status = VerdictStatus::fails;
    v.violated = "level sum stalls far below the divergence threshold";
  } else {
    v.status = VerdictStatus::inconclusive;
  }
  return v;
}

}  // namespace gmeasure

#endif  // GMEASURE_BLOCKVAR_HPP
