#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gmeasure/blockvar.hpp"
#include "test_support.hpp"

using namespace gmeasure;
using Catch::Approx;

namespace {

BlockVariationPair manual_pair(std::vector<long> b, std::vector<double> r) {
  BlockVariationPair p;
  p.blocks = BlockStructure(std::move(b));
  p.r = std::move(r);
  p.provenance = RateProvenance::manual;
  return p;
}

}  // namespace

TEST_CASE("block structure accumulates lengths") {
  BlockStructure bs({2, 3, 1});
  REQUIRE(bs.levels() == 3);
  REQUIRE(bs.B == std::vector<long>{0, 2, 5, 6});
  REQUIRE(bs.total() == 6);
  REQUIRE_THROWS_AS(BlockStructure({2, 0}), std::invalid_argument);
}

TEST_CASE("delta_bar worked closed forms") {
  REQUIRE(delta_bar(manual_pair({1}, {std::log(2.0)})) == Approx(1.5));
  REQUIRE(delta_bar(manual_pair({1, 1}, {std::log(2.0), std::log(2.0)})) ==
          Approx(7.0 / 6.0).epsilon(1e-13));
  // huge rates: every block fails immediately, (1 + B_M-ish) shape
  REQUIRE(delta_bar(manual_pair({1}, {50.0})) == Approx(2.0));
  // zero rates degenerate to 1 / sum b
  REQUIRE(delta_bar(manual_pair({4, 4}, {0.0, 0.0})) ==
          Approx(1.0 / 8.0).epsilon(1e-9));
}

TEST_CASE("delta_bar prefix uses the leading levels only") {
  BlockVariationPair p = manual_pair({1, 2, 3}, {0.5, 0.4, 0.3});
  REQUIRE(delta_bar(p, 1) == Approx(delta_bar(manual_pair({1}, {0.5}))));
  REQUIRE(delta_bar(p, 2) ==
          Approx(delta_bar(manual_pair({1, 2}, {0.5, 0.4}))));
  REQUIRE(delta_bar(p, 3) == Approx(delta_bar(p)));
  REQUIRE(delta_bar(p, 99) == Approx(delta_bar(p)));
}

TEST_CASE("rates derived from variations follow the s_l recipe") {
  VariationSequence vs;
  vs.values = {0.9, 0.4, 0.2, 0.1, 0.05, 0.0};
  vs.provenance.assign(vs.values.size(), Provenance::exact);
  BlockStructure blocks({2, 3});
  BlockVariationPair p = r_from_variations(vs, blocks);
  double s1 = 0.125 * (0.9 * 0.9 + 0.4 * 0.4);
  double s2 = 0.125 * (0.2 * 0.2 + 0.1 * 0.1 + 0.05 * 0.05);
  REQUIRE(p.s[0] == Approx(s1));
  REQUIRE(p.s[1] == Approx(s2));
  REQUIRE(p.r[0] == Approx(std::sqrt(2.0 * s1) + 2.0 * s1));
  REQUIRE(p.r[1] == Approx(std::sqrt(2.0 * s2) + 2.0 * s2));
  REQUIRE(p.provenance == RateProvenance::from_s);
  REQUIRE_THROWS_AS(r_from_variations(vs, BlockStructure({4, 4})),
                    std::invalid_argument);
}

TEST_CASE("Hellinger block-variation anchors on the worked table") {
  GFunction g = gmtest::table1();
  double h01 = h_block(g, 0, 1);
  REQUIRE(h01 ==
          Approx(-std::log(std::sqrt(0.7 * 0.4) + std::sqrt(0.3 * 0.6))));
  // past agreement at the memory depth kills the variation
  REQUIRE(h_block(g, 1, 1) == 0.0);
  REQUIRE(h_block(g, 2, 3) == 0.0);
  // longer blocks can only increase the worst case
  REQUIRE(h_block(g, 0, 2) >= h01 - 1e-15);
}

TEST_CASE("coupling block-variation and its bound chain on the worked table") {
  GFunction g = gmtest::table1();
  RhoBlock rho = rho_block(g, 0, 1);
  REQUIRE(rho.exact == Approx(-std::log(0.7)));
  REQUIRE(rho.exact <= rho.bound_log + 1e-15);
  REQUIRE(rho.bound_log <= rho.bound_sqrt + 1e-15);
  double v0 = std::log(0.7 / 0.3), v1 = std::log(2.0);
  REQUIRE(rho.bound_w == Approx(0.5 * std::sqrt(v0 * v0 + v1 * v1)));
  REQUIRE(rho.bound_w_caveat);
  REQUIRE(rho_block(g, 1, 1).exact == 0.0);
}

TEST_CASE("bound chain holds on random tables") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    GFunction g = gmtest::random_table_mem1(rng);
    for (int b = 1; b <= 3; ++b) {
      RhoBlock rho = rho_block(g, 0, b);
      REQUIRE(rho.exact <= rho.bound_log + 1e-12);
      REQUIRE(rho.bound_log <= rho.bound_sqrt + 1e-12);
    }
  }
}

TEST_CASE("validity report separates valid and invalid levels") {
  GFunction g = gmtest::table1();
  BlockVariationPair p = manual_pair({1, 1, 1}, {0.0, 0.0, 0.0});
  p.r[0] = rho_block(g, 0, 1).exact + 0.01;  // valid
  p.r[1] = 0.0;                              // rho(1,1) = 0, still valid
  p.r[2] = 0.0;
  ValidityReport rep = validity_report(g, p);
  REQUIRE(rep.all_valid);
  REQUIRE(rep.first_all_valid == 1);

  p.r[0] = rho_block(g, 0, 1).exact - 0.01;  // now level 1 is invalid
  rep = validity_report(g, p);
  REQUIRE_FALSE(rep.all_valid);
  REQUIRE_FALSE(rep.valid[0]);
  REQUIRE(rep.valid[1]);
  REQUIRE(rep.first_all_valid == 2);
}

TEST_CASE("variation models produce certified square tails") {
  VariationModel pow = VariationModel::power(1.0, 0.8);
  auto tail = pow.sq_tail(10);
  REQUIRE(tail.has_value());
  double brute = 0.0;
  for (long n = 10; n <= 2000000; ++n) brute += std::pow(double(n), -1.6);
  REQUIRE(*tail >= brute);
  REQUIRE(*tail <= brute * 3.0);  // not wildly loose
  REQUIRE_FALSE(VariationModel::power(1.0, 0.4).sq_tail(10).has_value());

  VariationModel geo = VariationModel::geometric(2.0, 0.5);
  double geo_brute = 0.0;
  for (long n = 3; n <= 200; ++n) geo_brute += geo.value(n) * geo.value(n);
  REQUIRE(*geo.sq_tail(3) == Approx(geo_brute));

  VariationSequence vs;
  vs.values = {0.5, 0.25, 0.1};
  vs.provenance.assign(3, Provenance::exact);
  VariationModel ex = VariationModel::explicit_seq(vs, true);
  REQUIRE(*ex.sq_tail(1) == Approx(0.25 * 0.25 + 0.01));
  REQUIRE(ex.value(99) == 0.0);
  VariationModel ex2 = VariationModel::explicit_seq(vs, false);
  REQUIRE_FALSE(ex2.sq_tail(0).has_value());
  REQUIRE_THROWS_AS(ex2.value(99), std::invalid_argument);
}

TEST_CASE("geometric block construction matches the ceiling formula") {
  VariationModel vars = VariationModel::power(1.0, 1.0);
  BlockStructure bs = make_blocks(BlockStrategy::geometric, 2.0, vars, 6);
  for (std::size_t l = 1; l <= 6; ++l)
    REQUIRE(bs.B[l] == long(std::ceil(std::pow(2.0, double(l)))));
  BlockStructure unit = make_blocks(BlockStrategy::unit, 0.0, vars, 4);
  REQUIRE(unit.b == std::vector<long>{1, 1, 1, 1});
}

TEST_CASE("tail block construction halves the square tail per level") {
  VariationModel vars = VariationModel::geometric(1.0, 0.8);
  BlockStructure bs = make_blocks(BlockStrategy::tail, 0.0, vars, 5);
  double L = *vars.sq_tail(0);
  for (std::size_t l = 1; l <= 5; ++l) {
    REQUIRE(*vars.sq_tail(bs.B[l]) <= L / std::pow(2.0, double(l)));
    if (bs.B[l] > bs.B[l - 1] + 1)
      REQUIRE(*vars.sq_tail(bs.B[l] - 1) > L / std::pow(2.0, double(l)));
  }
}

TEST_CASE("square-summability checker classifies the standard regimes") {
  ConditionParams prm;
  ConditionVerdict hold =
      check_square(VariationModel::power(1.0, 0.6), prm, 100000);
  REQUIRE(hold.status == VerdictStatus::holds_at_horizon);
  REQUIRE(hold.witness_value("tail_bound") > 0.0);

  VariationSequence vs;
  for (int n = 0; n < 50; ++n) vs.values.push_back(1.0 / double(n + 1));
  vs.provenance.assign(vs.values.size(), Provenance::exact);
  ConditionVerdict exact =
      check_square(VariationModel::explicit_seq(vs, true), prm, 1000);
  REQUIRE(exact.status == VerdictStatus::holds_at_horizon);

  // var_n^2 = 1/n: harmonic, decade increments stay constant
  ConditionVerdict div =
      check_square(VariationModel::power(1.0, 0.5), prm, 100000);
  REQUIRE(div.status == VerdictStatus::fails);
  REQUIRE_FALSE(div.violated.empty());
}

TEST_CASE("epsilon-entropy checker classifies the standard regimes") {
  ConditionParams prm;
  prm.epsilon = 0.1;
  // var_n = 1/n: exponent (0.6) log n, terms ~ n^{-0.6}, divergent
  ConditionVerdict hold =
      check_berbee(VariationModel::power(1.0, 1.0), prm, 100000);
  REQUIRE(hold.status == VerdictStatus::holds_at_horizon);

  // constant variation: geometric terms, certified convergent
  prm.epsilon = 0.0;
  ConditionVerdict fail =
      check_berbee(VariationModel::power(3.0, 0.0), prm, 10000);
  REQUIRE(fail.status == VerdictStatus::fails);

  // var_n = 3/n at epsilon 0: terms ~ n^{-1.5}; the partial sum stalls but
  // the geometric certificate is far above tolerance, so no verdict
  ConditionVerdict inc =
      check_berbee(VariationModel::power(3.0, 1.0), prm, 1000000);
  REQUIRE(inc.status == VerdictStatus::inconclusive);
}

TEST_CASE("main-condition checker reads the level sums") {
  ConditionParams prm;
  // summable rates: terms stay bounded below, the level sum grows linearly
  std::vector<long> b(60, 1);
  std::vector<double> r;
  for (int l = 1; l <= 60; ++l) r.push_back(std::pow(2.0, -double(l)));
  ConditionVerdict hold = check_main(manual_pair(b, r), prm);
  REQUIRE(hold.status == VerdictStatus::holds_at_horizon);
  REQUIRE(hold.witness_value("limsup_r_tail") < 1e-4);
  REQUIRE(hold.witness_value("sum_through_r_l") <
          hold.witness_value("sum_through_r_lminus1"));

  // constant rate 1: geometric terms, sum stalls at ~0.58
  std::vector<double> rc(60, 1.0);
  ConditionVerdict fail = check_main(manual_pair(b, rc), prm);
  REQUIRE(fail.status == VerdictStatus::fails);
}
