#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gmeasure/coupling.hpp"
#include "test_support.hpp"

using namespace gmeasure;
using Catch::Approx;

namespace {

BlockVariationPair valid_unit_pair(const GFunction& g, std::size_t M,
                                   double margin = 1e-6) {
  BlockVariationPair p;
  p.blocks = BlockStructure(std::vector<long>(M, 1));
  for (std::size_t l = 0; l < M; ++l)
    p.r.push_back(rho_block(g, int(l), 1).exact + margin);
  p.provenance = RateProvenance::from_rho;
  return p;
}

}  // namespace

TEST_CASE("sup log gap between tables is the worst entry ratio") {
  GFunction g = gmtest::table1();
  GFunction g2 = gmtest::table_mem1(0.32, 0.6);
  double expect = std::max(std::abs(std::log(0.32 / 0.3)),
                           std::abs(std::log(0.68 / 0.7)));
  REQUIRE(sup_log_gap(g, g2) == Approx(expect));
  REQUIRE(sup_log_gap(g, g) == 0.0);
}

TEST_CASE("sup log gap covers a table against its logistic twin") {
  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  double t1 = logit(0.3), t0 = logit(0.6);
  GFunction lg = GFunction::logistic(0.5 * (t1 + t0), {0.5 * (t1 - t0)});
  REQUIRE(sup_log_gap(gmtest::table1(), lg) == Approx(0.0).margin(1e-12));
}

TEST_CASE("kernel shift inflates the failure exponent by at most s per step") {
  // -log p_actual <= rho_block(g,B,b).exact + s*b over all past pairs
  // agreeing in the first B coordinates
  GFunction g = gmtest::table1();
  GFunction g2 = gmtest::table_mem1(0.33, 0.57);
  double s = sup_log_gap(g, g2);
  std::mt19937_64 rng(0);
  Alphabet a(2);
  for (int B = 0; B <= 2; ++B)
    for (int b = 1; b <= 3; ++b) {
      double rho = rho_block(g, B, b).exact;
      int d = std::max(B, 1);
      for (std::size_t i = 0; i < word_count(a, d); ++i)
        for (std::size_t j = 0; j < word_count(a, d); ++j) {
          Word y = word_at(a, i, d), y2 = word_at(a, j, d);
          if (concordance(y, y2) < std::min(B, d)) continue;
          CoupledState st;
          st.left_past = y;
          st.right_past = y2;
          BlockPair bp = sample_block_pair(g, g2, st, b, rng);
          REQUIRE(-std::log(bp.p_actual) <= rho + s * double(b) + 1e-12);
        }
    }
}

TEST_CASE("block pair sampling succeeds at the overlap rate") {
  GFunction g = gmtest::table1();
  CoupledState st;
  st.left_past = {1, 0};
  st.right_past = {0, 0};
  std::mt19937_64 rng(2);
  const int N = 50000;
  int succ = 0;
  for (int i = 0; i < N; ++i) {
    BlockPair bp = sample_block_pair(g, g, st, 1, rng);
    REQUIRE(bp.p_actual == Approx(0.7));
    REQUIRE(bp.success == (bp.left == bp.right));
    if (bp.success) ++succ;
  }
  double sigma = std::sqrt(0.7 * 0.3 / N);
  REQUIRE(std::abs(double(succ) / N - 0.7) < 3.0 * sigma);
}

TEST_CASE("shared uniform forces the success event") {
  GFunction g = gmtest::table1();
  CoupledState st;
  st.left_past = {1, 0};
  st.right_past = {0, 0};
  std::mt19937_64 rng(3);
  for (double u : {0.1, 0.69, 0.71, 0.99}) {
    BlockPair bp = sample_block_pair(g, g, st, 1, rng, &u);
    REQUIRE(bp.success == (u < 0.7));
  }
}

TEST_CASE("block extension updates pasts and concordance") {
  GFunction g = gmtest::table1();
  CoupledState st;
  st.left_past = {1, 1};
  st.right_past = {1, 1};
  st.kappa = 2;
  std::mt19937_64 rng(4);
  ExtensionResult res = coupled_block_extension(g, g, st, 3, rng);
  REQUIRE(res.success);  // identical pasts, overlap 1
  REQUIRE(res.p_actual == Approx(1.0));
  REQUIRE(st.kappa == 5);
  REQUIRE(st.left_past == st.right_past);
  REQUIRE(st.left_past.size() >= 3);
}

TEST_CASE("failed extension resets concordance to the sampled words") {
  GFunction g = gmtest::table1();
  std::mt19937_64 rng(5);
  int failures = 0;
  for (int rep = 0; rep < 200 && failures < 10; ++rep) {
    CoupledState st;
    st.left_past = {1, 1};
    st.right_past = {0, 0};
    ExtensionResult res = coupled_block_extension(g, g, st, 1, rng);
    if (!res.success) {
      ++failures;
      REQUIRE(st.kappa == 0);
      REQUIRE(st.left_past[0] != st.right_past[0]);
    } else {
      REQUIRE(st.kappa == 1);
    }
  }
  REQUIRE(failures == 10);
}

TEST_CASE("coupled run is reproducible and well-formed") {
  GFunction g = gmtest::table1();
  BlockVariationPair p = valid_unit_pair(g, 4);
  CouplingTrace a = run_coupling(g, g, p, 500, 77);
  CouplingTrace b = run_coupling(g, g, p, 500, 77);
  REQUIRE(a.steps.size() == 500);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    REQUIRE(a.steps[i].kappa == b.steps[i].kappa);
    REQUIRE(a.steps[i].y == b.steps[i].y);
  }
  REQUIRE(a.tail_steps == 50);
  long level_events = 0;
  for (std::size_t l = 0; l < 4; ++l)
    level_events += a.level_successes[l] + a.level_failures[l];
  REQUIRE(level_events > 0);
}

TEST_CASE("identical kernels under valid rates dominate the Y chain") {
  GFunction g = gmtest::table1();
  BlockVariationPair p = valid_unit_pair(g, 5);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    CouplingTrace t = run_coupling(g, g, p, 400, seed, InitialPasts::adversarial,
                                   /*keep_records=*/false);
    REQUIRE(t.validity_violations == 0);
    REQUIRE(t.dominance_failures == 0);
    REQUIRE(t.s == 0.0);
  }
}

TEST_CASE("initial past styles are honored") {
  GFunction g = gmtest::table1();
  BlockVariationPair p = valid_unit_pair(g, 3);
  std::mt19937_64 rng(1);
  CouplingTrace t = run_coupling(g, g, p, 50, 11, InitialPasts::stationary);
  REQUIRE(t.horizon == 50);
  CouplingTrace u = run_coupling(g, g, p, 50, 11, InitialPasts::uniform);
  REQUIRE(u.horizon == 50);
}

TEST_CASE("dbar estimate is thread-count invariant and seeded") {
  GFunction g = gmtest::table1();
  GFunction g2 = gmtest::table_mem1(0.31, 0.59);
  BlockVariationPair p = valid_unit_pair(g, 4, 0.05);
  DbarEstimate one = estimate_dbar(g, g2, p, 800, 12, 2025,
                                   InitialPasts::adversarial, 1);
  DbarEstimate four = estimate_dbar(g, g2, p, 800, 12, 2025,
                                    InitialPasts::adversarial, 4);
  REQUIRE(one.estimate == four.estimate);
  REQUIRE(one.band == four.band);
  REQUIRE(one.validity_violations == four.validity_violations);
  REQUIRE(one.s == Approx(sup_log_gap(g, g2)));
  REQUIRE(one.trials == 12);
  REQUIRE(one.estimate >= 0.0);
  REQUIRE(one.estimate <= 1.0);
}

TEST_CASE("dbar ceiling inflates the rates by the kernel gap") {
  GFunction g = gmtest::table1();
  BlockVariationPair p = valid_unit_pair(g, 3, 0.02);
  DbarEstimate self = estimate_dbar(g, g, p, 400, 4, 7);
  REQUIRE(self.s == 0.0);
  REQUIRE(self.ceiling == Approx(delta_bar(p)));
  GFunction g2 = gmtest::table_mem1(0.32, 0.62);
  DbarEstimate cross = estimate_dbar(g, g2, p, 400, 4, 7);
  BlockVariationPair inflated = p;
  for (std::size_t l = 0; l < p.blocks.levels(); ++l)
    inflated.r[l] += cross.s * double(p.blocks.b[l]);
  REQUIRE(cross.ceiling == Approx(delta_bar(inflated)));
  REQUIRE(cross.ceiling > self.ceiling);
}

TEST_CASE("adjoint iterates contract adversarial point masses") {
  GFunction g = gmtest::table1();
  Alphabet a(2);
  CylinderMeasure nu1 = CylinderMeasure::point_mass(a, {1});
  CylinderMeasure nu2 = CylinderMeasure::point_mass(a, {0});
  AttractorSeries series = iterate_attractor(g, nu1, nu2, 15, 12);
  REQUIRE(series.distances.size() == 15);
  REQUIRE(series.distances.back() < 0.05 * series.distances.front());
  REQUIRE(series.distances.back() < 1e-2);
  REQUIRE(series.resolution == Approx(std::ldexp(1.0, -12)));
  // monotone after the first few steps
  for (std::size_t n = 3; n < series.distances.size(); ++n)
    REQUIRE(series.distances[n] <= series.distances[n - 1] + 1e-12);
}
