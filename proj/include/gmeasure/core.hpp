#ifndef GMEASURE_CORE_HPP
#define GMEASURE_CORE_HPP

// Basic symbolic-dynamics vocabulary: finite alphabets, finite words over
// them, and the indexing scheme shared by every module that enumerates
// words of a fixed length.
//
// Convention used throughout: a Word lists coordinates of a one-sided
// sequence x = (x_0, x_1, ...) with index 0 the most recent (leftmost)
// coordinate.  "x ~_n y" means the first n coordinates agree.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmeasure {

using Symbol = int;

struct Alphabet {
  int size = 2;

  explicit Alphabet(int s = 2) : size(s) {
    if (s < 1) throw std::invalid_argument("Alphabet: size must be >= 1");
  }
  bool operator==(const Alphabet&) const = default;
};

using Word = std::vector<Symbol>;

inline void check_word(const Alphabet& a, const Word& w) {
  for (Symbol s : w)
    if (s < 0 || s >= a.size)
      throw std::invalid_argument("Word: symbol out of alphabet range");
}

// Number of length-n words; guards against overflow before allocating.
inline std::size_t word_count(const Alphabet& a, int n) {
  std::size_t c = 1;
  for (int i = 0; i < n; ++i) {
    if (c > (std::size_t(1) << 56) / std::size_t(a.size))
      throw std::invalid_argument("word_count: |S|^n too large");
    c *= std::size_t(a.size);
  }
  return c;
}

// Lexicographic index of a word, coordinate 0 most significant.
inline std::size_t word_index(const Alphabet& a, const Word& w) {
  std::size_t idx = 0;
  for (Symbol s : w) idx = idx * std::size_t(a.size) + std::size_t(s);
  return idx;
}

inline Word word_at(const Alphabet& a, std::size_t idx, int n) {
  Word w(std::size_t(n), 0);
  for (int i = n - 1; i >= 0; --i) {
    w[std::size_t(i)] = Symbol(idx % std::size_t(a.size));
    idx /= std::size_t(a.size);
  }
  return w;
}

// Concordance time: length of the longest common prefix, capped at the
// word length.
inline int concordance(const Word& x, const Word& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("concordance: length mismatch");
  int k = 0;
  while (std::size_t(k) < x.size() && x[std::size_t(k)] == y[std::size_t(k)])
    ++k;
  return k;
}

// Kahan-compensated accumulator for long recursions and big sums.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    double y = v - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

}  // namespace gmeasure

#endif  // GMEASURE_CORE_HPP
