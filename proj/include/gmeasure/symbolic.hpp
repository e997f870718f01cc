#ifndef GMEASURE_SYMBOLIC_HPP
#define GMEASURE_SYMBOLIC_HPP

// g-functions on the one-sided shift space over a finite alphabet:
// exact finite-memory tables and a depth-truncated long-range logistic
// family, together with the variation sequence var_n log g that drives
// every condition downstream.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gmeasure/core.hpp"

namespace gmeasure {

enum class Provenance { exact, upper_bound };

struct VariationSequence {
  std::vector<double> values;          // values[n] bounds var_n log g
  std::vector<Provenance> provenance;  // per entry

  double at(std::size_t n) const {
    if (n >= values.size())
      throw std::invalid_argument("VariationSequence: index beyond data");
    return values[n];
  }
};

enum class GKind { table, long_range_logistic };

// Positivity floor for table entries; log g must stay finite.
inline constexpr double kTableFloor = 1e-9;
inline constexpr double kNormTol = 1e-12;

class GFunction {
 public:
  // Table kind: values indexed by (m+1)-words (x_0 ... x_m), x_0 the new
  // symbol.  Every column (fixed past x_1..x_m) must sum to 1.
  static GFunction table(Alphabet a, int memory, std::vector<double> values) {
    GFunction g;
    g.kind_ = GKind::table;
    g.alphabet_ = a;
    g.memory_ = memory;
    if (memory < 0) throw std::invalid_argument("GFunction: memory < 0");
    std::size_t n = word_count(a, memory + 1);
    if (values.size() != n)
      throw std::invalid_argument("GFunction: table size != |S|^(m+1)");
    std::size_t cols = word_count(a, memory);
    std::size_t stride = n / std::size_t(a.size);
    for (double v : values)
      if (!(v >= kTableFloor) || v > 1.0)
        throw std::invalid_argument(
            "GFunction: table entry outside [1e-9, 1]");
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int x0 = 0; x0 < a.size; ++x0)
        s += values[std::size_t(x0) * stride + c];
      if (std::abs(s - 1.0) > kNormTol)
        throw std::invalid_argument("GFunction: column not normalized");
    }
    g.values_ = std::move(values);
    return g;
  }

  // Long-range binary family: P(x_0 = 1 | past) = sigma(theta0 +
  // sum_{k=1..D} theta_k (2 x_k - 1)), coordinates beyond depth D filled
  // with symbol 0.  `tail` gives sum_{k>=n} |theta_k| for n > D when the
  // couplings continue past the truncation depth.
  static GFunction logistic(double bias, std::vector<double> couplings,
                            std::function<double(int)> tail = nullptr) {
    if (couplings.empty())
      throw std::invalid_argument("GFunction: logistic needs depth >= 1");
    GFunction g;
    g.kind_ = GKind::long_range_logistic;
    g.alphabet_ = Alphabet(2);
    g.bias_ = bias;
    g.couplings_ = std::move(couplings);
    g.tail_ = std::move(tail);
    return g;
  }

  GKind kind() const { return kind_; }
  const Alphabet& alphabet() const { return alphabet_; }
  int memory() const { return memory_; }  // table kind only
  int depth() const { return int(couplings_.size()); }
  double bias() const { return bias_; }
  const std::vector<double>& couplings() const { return couplings_; }
  const std::vector<double>& table_values() const { return values_; }

  // Depth of past (including the new symbol at index 0) after which g is
  // insensitive to further coordinates of the truncated kernel.
  int required_depth() const {
    return kind_ == GKind::table ? memory_ + 1 : depth() + 1;
  }

  // sum_{k>=n} |theta_k| for the logistic couplings, including the
  // user-certified tail beyond the truncation depth.
  double coupling_abs_tail(int n) const {
    if (kind_ != GKind::long_range_logistic)
      throw std::invalid_argument("coupling_abs_tail: logistic kind only");
    double s = 0.0;
    for (int k = depth(); k >= std::max(n, 1); --k)
      s += std::abs(couplings_[std::size_t(k - 1)]);
    if (tail_) s += tail_(std::max(n, depth() + 1));
    return s;
  }

  // Additive sup-log error of the depth-D truncation, per evaluation.
  double truncation_slack() const {
    if (kind_ != GKind::table && tail_) return 2.0 * tail_(depth() + 1);
    return 0.0;
  }

  bool operator==(const GFunction& o) const {
    return kind_ == o.kind_ && alphabet_ == o.alphabet_ &&
           memory_ == o.memory_ && values_ == o.values_ &&
           bias_ == o.bias_ && couplings_ == o.couplings_;
  }

 private:
  GFunction() = default;

  GKind kind_ = GKind::table;
  Alphabet alphabet_{2};
  int memory_ = 0;
  std::vector<double> values_;  // table kind
  double bias_ = 0.0;           // logistic kind
  std::vector<double> couplings_;
  std::function<double(int)> tail_;
};

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

// g evaluated with past[0] the new symbol and past[1..] the history.
inline double eval_g(const GFunction& g, const Word& past) {
  check_word(g.alphabet(), past);
  if (past.empty()) throw std::invalid_argument("eval_g: empty past");
  if (g.kind() == GKind::table) {
    int need = g.memory() + 1;
    if (int(past.size()) < need)
      throw std::invalid_argument("eval_g: past shorter than memory+1");
    Word w(past.begin(), past.begin() + need);
    return g.table_values()[word_index(g.alphabet(), w)];
  }
  double field = g.bias();
  const auto& th = g.couplings();
  for (int k = 1; k <= g.depth(); ++k) {
    Symbol xk = std::size_t(k) < past.size() ? past[std::size_t(k)] : 0;
    field += th[std::size_t(k - 1)] * double(2 * xk - 1);
  }
  double p1 = sigmoid(field);
  return past[0] == 1 ? p1 : 1.0 - p1;
}

// var_n log g.  Table kind: exact sup over all pairs of (m+1)-words that
// agree in the first min(n, m+1) coordinates.  Logistic kind: the computable
// upper bound 2 sum_{k>=n} |theta_k| (n >= 1), or the log-range bound for
// n = 0 where the new symbol itself may change.
struct Variation {
  double value = 0.0;
  Provenance provenance = Provenance::exact;
};

inline Variation variation(const GFunction& g, int n) {
  if (n < 0) throw std::invalid_argument("variation: n < 0");
  if (g.kind() == GKind::table) {
    int m = g.memory();
    if (n >= m + 1) return {0.0, Provenance::exact};
    const Alphabet& a = g.alphabet();
    std::size_t total = word_count(a, m + 1);
    std::size_t fixed = word_count(a, n);
    std::size_t free_part = total / fixed;
    double sup = 0.0;
    for (std::size_t p = 0; p < fixed; ++p)
      for (std::size_t i = 0; i < free_part; ++i)
        for (std::size_t j = i + 1; j < free_part; ++j) {
          double d = std::abs(std::log(g.table_values()[p * free_part + i]) -
                              std::log(g.table_values()[p * free_part + j]));
          sup = std::max(sup, d);
        }
    return {sup, Provenance::exact};
  }
  if (n == 0) {
    // The new symbol may flip; bound by the full log-range of g, which is
    // [sigma(-amp), sigma(amp)] for either symbol.
    double amp = std::abs(g.bias()) + g.coupling_abs_tail(1);
    return {std::log(sigmoid(amp)) - std::log(sigmoid(-amp)),
            Provenance::upper_bound};
  }
  return {2.0 * g.coupling_abs_tail(n), Provenance::upper_bound};
}

inline VariationSequence variation_sequence(const GFunction& g, int n_max) {
  VariationSequence vs;
  for (int n = 0; n <= n_max; ++n) {
    Variation v = variation(g, n);
    vs.values.push_back(v.value);
    vs.provenance.push_back(v.provenance);
  }
  return vs;
}

// Exact variation of the depth-truncated logistic kernel: sup over all
// pairs of depth-(D+1) arguments agreeing in the first n coordinates.
// Exponential in D; test-scale only.
inline double logistic_variation_truncated(const GFunction& g, int n) {
  if (g.kind() != GKind::long_range_logistic)
    throw std::invalid_argument("logistic_variation_truncated: wrong kind");
  if (n < 1) throw std::invalid_argument("logistic_variation_truncated: n>=1");
  int d = g.depth() + 1;  // new symbol + D history coordinates
  if (n >= d) return 0.0;
  const Alphabet a(2);
  std::size_t shared = word_count(a, n);
  std::size_t tail = word_count(a, d - n);
  double sup = 0.0;
  Word x(std::size_t(d), 0), y(std::size_t(d), 0);
  for (std::size_t s = 0; s < shared; ++s) {
    Word pre = word_at(a, s, n);
    std::copy(pre.begin(), pre.end(), x.begin());
    std::copy(pre.begin(), pre.end(), y.begin());
    for (std::size_t i = 0; i < tail; ++i) {
      Word ti = word_at(a, i, d - n);
      std::copy(ti.begin(), ti.end(), x.begin() + n);
      for (std::size_t j = 0; j < tail; ++j) {
        Word tj = word_at(a, j, d - n);
        std::copy(tj.begin(), tj.end(), y.begin() + n);
        sup = std::max(sup,
                       std::abs(std::log(eval_g(g, x)) - std::log(eval_g(g, y))));
      }
    }
  }
  return sup;
}

// Finite-memory approximation g~_N(x) = g(x_0 ... x_N z), columns
// renormalized exactly.  sup_log_bound certifies || log g~_N - log g ||_inf;
// it is doubled whenever renormalization actually moved a column.
struct FiniteApprox {
  GFunction approx;
  double sup_log_bound;
};

inline FiniteApprox finite_approx(const GFunction& g, int N, const Word& z) {
  if (N < 0) throw std::invalid_argument("finite_approx: N < 0");
  const Alphabet& a = g.alphabet();
  check_word(a, z);
  int need = g.required_depth();
  if (g.kind() == GKind::table && N + 1 + int(z.size()) < need)
    throw std::invalid_argument("finite_approx: continuation word too short");
  std::size_t n = word_count(a, N + 1);
  std::vector<double> vals(n);
  Word full;
  for (std::size_t i = 0; i < n; ++i) {
    full = word_at(a, i, N + 1);
    full.insert(full.end(), z.begin(), z.end());
    while (int(full.size()) < need) full.push_back(0);  // logistic fill
    vals[i] = std::max(eval_g(g, full), kTableFloor);
  }
  std::size_t cols = word_count(a, N);
  std::size_t stride = n / std::size_t(a.size);
  bool renormalized = false;
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (int x0 = 0; x0 < a.size; ++x0) s += vals[std::size_t(x0) * stride + c];
    if (std::abs(s - 1.0) > 1e-15) renormalized = true;
    for (int x0 = 0; x0 < a.size; ++x0) vals[std::size_t(x0) * stride + c] /= s;
  }
  // the approximation and g agree in coordinates 0..N
  double bound = variation(g, N + 1).value + g.truncation_slack();
  if (renormalized) bound *= 2.0;
  return {GFunction::table(a, N, std::move(vals)), bound};
}

}  // namespace gmeasure

#endif  // GMEASURE_SYMBOLIC_HPP
