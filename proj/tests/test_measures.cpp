#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gmeasure/measures.hpp"
#include "test_support.hpp"

using namespace gmeasure;
using Catch::Approx;

TEST_CASE("point mass and uniform validate") {
  Alphabet a(2);
  CylinderMeasure pm = CylinderMeasure::point_mass(a, {1, 0});
  REQUIRE_NOTHROW(pm.validate());
  REQUIRE(pm.mass[word_index(a, {1, 0})] == 1.0);
  CylinderMeasure u = CylinderMeasure::uniform(a, 3);
  REQUIRE_NOTHROW(u.validate());
  REQUIRE(u.total() == Approx(1.0));
  CylinderMeasure bad{a, 2, {0.5, 0.5, 0.5, -0.5}};
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("marginalizing drops the deepest coordinates") {
  Alphabet a(2);
  CylinderMeasure m{a, 2, {0.1, 0.2, 0.3, 0.4}};
  CylinderMeasure m1 = marginalize_last(m, 1);
  REQUIRE(m1.depth == 1);
  REQUIRE(m1.mass[0] == Approx(0.3));
  REQUIRE(m1.mass[1] == Approx(0.7));
  REQUIRE(marginalize_last(m, 2).mass[0] == Approx(1.0));
  REQUIRE_THROWS_AS(marginalize_last(m, 3), std::invalid_argument);
}

TEST_CASE("word reversal is a mass-preserving involution") {
  Alphabet a(2);
  CylinderMeasure m{a, 3, {0.1, 0.05, 0.15, 0.2, 0.1, 0.1, 0.05, 0.25}};
  CylinderMeasure r = reverse_words(m);
  REQUIRE(r.mass[word_index(a, {1, 0, 0})] ==
          Approx(m.mass[word_index(a, {0, 0, 1})]));
  CylinderMeasure rr = reverse_words(r);
  for (std::size_t i = 0; i < m.mass.size(); ++i)
    REQUIRE(rr.mass[i] == Approx(m.mass[i]));
  REQUIRE(r.total() == Approx(1.0));
}

TEST_CASE("block marginal from a fixed past multiplies kernel factors") {
  GFunction g = gmtest::table1();
  BlockMarginal eta = block_marginal(g, {1}, 2);
  Alphabet a(2);
  // word (y1, y2): mass = g(y1 | 1) g(y2 | y1)
  REQUIRE(eta.mass[word_index(a, {0, 0})] == Approx(0.7 * 0.4));
  REQUIRE(eta.mass[word_index(a, {0, 1})] == Approx(0.7 * 0.6));
  REQUIRE(eta.mass[word_index(a, {1, 0})] == Approx(0.3 * 0.7));
  REQUIRE(eta.mass[word_index(a, {1, 1})] == Approx(0.3 * 0.3));
  REQUIRE(eta.total() == Approx(1.0));
  REQUIRE_THROWS_AS(block_marginal(g, {1}, 0), std::invalid_argument);
}

TEST_CASE("block marginals total one for random tables and depths") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    GFunction g = gmtest::random_table_mem1(rng);
    for (int b = 1; b <= 5; ++b)
      REQUIRE(block_marginal(g, {rep % 2}, b).total() == Approx(1.0));
  }
}

TEST_CASE("stationary measure solves the balance equation") {
  GFunction g = gmtest::table1();
  CylinderMeasure pi = stationary_measure(g);
  REQUIRE(pi.depth == 1);
  // pi(1) = g(1|0) / (g(1|0) + g(0|1)) for a two-state chain
  REQUIRE(pi.mass[1] == Approx(0.6 / 1.3));
  REQUIRE(pi.mass[0] == Approx(0.7 / 1.3));
  // invariant under one adjoint step
  CylinderMeasure ext = stationary_measure(g, 2);
  CylinderMeasure stepped = adjoint_power(g, pi, 1);
  for (std::size_t i = 0; i < ext.mass.size(); ++i)
    REQUIRE(stepped.mass[i] == Approx(ext.mass[i]));
}

TEST_CASE("stationary measure of a memory-0 kernel is the product measure") {
  GFunction g = gmtest::iid_binary(0.3);
  CylinderMeasure mu = stationary_measure(g, 3);
  Alphabet a(2);
  for (std::size_t i = 0; i < mu.mass.size(); ++i) {
    Word w = word_at(a, i, 3);
    double p = 1.0;
    for (Symbol s : w) p *= s == 1 ? 0.3 : 0.7;
    REQUIRE(mu.mass[i] == Approx(p));
  }
}

TEST_CASE("stationary extension marginalizes back to the core law") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    GFunction g = gmtest::random_table_mem1(rng);
    CylinderMeasure pi = stationary_measure(g);
    CylinderMeasure deep = stationary_measure(g, 4);
    REQUIRE(deep.total() == Approx(1.0));
    CylinderMeasure back = marginalize_last(deep, 3);
    // the most recent coordinate of the stationary chain has law pi
    for (std::size_t i = 0; i < pi.mass.size(); ++i)
      REQUIRE(back.mass[i] == Approx(pi.mass[i]));
  }
}

TEST_CASE("adjoint power grows depth, preserves mass and respects the cap") {
  GFunction g = gmtest::table1();
  CylinderMeasure nu = CylinderMeasure::point_mass(g.alphabet(), {1, 1});
  CylinderMeasure one = adjoint_power(g, nu, 1);
  REQUIRE(one.depth == 3);
  REQUIRE(one.total() == Approx(1.0));
  // new coordinate sits at index 0: P(x0 = 1 | past 1) = 0.3
  CylinderMeasure head = marginalize_last(one, 2);
  REQUIRE(head.mass[1] == Approx(0.3));
  CylinderMeasure capped = adjoint_power(g, nu, 10, 4);
  REQUIRE(capped.depth == 4);
  REQUIRE(capped.total() == Approx(1.0));
  REQUIRE_THROWS_AS(adjoint_power(g, nu, 0), std::invalid_argument);
}

TEST_CASE("capped adjoint power agrees with the uncapped marginal") {
  GFunction g = gmtest::table1();
  CylinderMeasure nu = CylinderMeasure::point_mass(g.alphabet(), {0, 1});
  CylinderMeasure uncapped = adjoint_power(g, nu, 5, 20);
  CylinderMeasure capped = adjoint_power(g, nu, 5, 3);
  CylinderMeasure folded = marginalize_last(uncapped, uncapped.depth - 3);
  for (std::size_t i = 0; i < capped.mass.size(); ++i)
    REQUIRE(capped.mass[i] == Approx(folded.mass[i]));
}
