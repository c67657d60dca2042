#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "perfit/error.hpp"
#include "perfit/rank_tests.hpp"
#include "perfit/rng.hpp"
#include "support/oracles.hpp"

using namespace perfit;
using namespace perfit::ranks;

TEST_CASE("mid ranks average over ties") {
  auto r = mid_ranks(std::vector<double>{3.0, 1.0, 3.0, 2.0, 3.0});
  CHECK(r.ranks == std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0});
  CHECK(r.tie_term == doctest::Approx(27.0 - 3.0));  // one run of length 3
}

TEST_CASE("alternative tokens round trip") {
  for (Alternative a : {Alternative::Less, Alternative::Greater, Alternative::TwoSided})
    CHECK(parse_alternative(alternative_token(a)) == a);
  CHECK_THROWS_AS(parse_alternative("sideways"), Error);
}

TEST_CASE("wilcoxon hand example") {
  std::vector<double> a = {1, 2};
  std::vector<double> b = {3, 4};

  SUBCASE("auto picks the exact path for tiny samples") {
    TestResult t = wilcoxon_rank_sum(a, b, Alternative::Less, RankMethod::Auto);
    CHECK(t.p_value == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(t.p_method == PMethod::Exact);
    CHECK(t.statistic == doctest::Approx(0.0));  // U = 3 - 3
    CHECK(t.group_sizes == std::vector<int>{2, 2});
  }
  SUBCASE("forced approximation matches the frozen value") {
    TestResult t = wilcoxon_rank_sum(a, b, Alternative::Less, RankMethod::Approx);
    CHECK(t.p_value == doctest::Approx(0.12263905840338643).epsilon(1e-14));
    CHECK(t.p_method == PMethod::NormalApprox);
    REQUIRE(t.z.has_value());
    CHECK(*t.z == doctest::Approx(-1.161895003862225).epsilon(1e-12));
  }
  SUBCASE("swapping groups flips the tail") {
    TestResult less = wilcoxon_rank_sum(a, b, Alternative::Less, RankMethod::Exact);
    TestResult greater = wilcoxon_rank_sum(b, a, Alternative::Greater, RankMethod::Exact);
    CHECK(less.p_value == doctest::Approx(greater.p_value).epsilon(1e-12));
  }
}

TEST_CASE("wilcoxon degenerate and extreme inputs") {
  SUBCASE("identical constant groups") {
    TestResult t = wilcoxon_rank_sum(std::vector<double>{5, 5, 5}, std::vector<double>{5, 5, 5},
                                     Alternative::TwoSided, RankMethod::Auto);
    CHECK(t.degenerate);
    CHECK(t.p_value == 1.0);
    CHECK(*t.z == 0.0);
  }
  SUBCASE("complete separation yields a tiny p") {
    std::vector<double> lo(40), hi(40);
    for (std::size_t i = 0; i < 40; ++i) {
      lo[i] = static_cast<double>(i);
      hi[i] = 1000.0 + static_cast<double>(i);
    }
    TestResult t = wilcoxon_rank_sum(lo, hi, Alternative::Less, RankMethod::Auto);
    CHECK(t.p_value < 1e-10);
  }
  SUBCASE("empty group rejected") {
    CHECK_THROWS_AS(
        wilcoxon_rank_sum(std::vector<double>{}, std::vector<double>{1.0}, Alternative::Less),
        Error);
  }
  SUBCASE("forced exact on huge samples rejected") {
    std::vector<double> big(400);
    for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<double>(i);
    CHECK_THROWS_AS(wilcoxon_rank_sum(big, big, Alternative::Less, RankMethod::Exact), Error);
  }
}

TEST_CASE("wilcoxon exact agrees with the bitmask oracle") {
  rng::Rng rng(66111);
  for (int round = 0; round < 30; ++round) {
    std::size_t m = 1 + rng.below(6);
    std::size_t n = 1 + rng.below(6);
    std::vector<double> a(m), b(n);
    for (auto& v : a) v = std::floor(rng.uniform01() * 6);  // ties likely
    for (auto& v : b) v = std::floor(rng.uniform01() * 6);
    for (auto [alt, code] : {std::pair{Alternative::Less, 'l'},
                             std::pair{Alternative::Greater, 'g'},
                             std::pair{Alternative::TwoSided, 't'}}) {
      TestResult t = wilcoxon_rank_sum(a, b, alt, RankMethod::Exact);
      double ref = oracle::wilcoxon_exact_p(a, b, code);
      CHECK(t.p_value == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("wilcoxon is invariant to monotone transforms") {
  rng::Rng rng(5412);
  std::vector<double> a(9), b(7);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal() + 0.4;
  auto warp = [](double x) { return std::exp(0.5 * x) + x; };
  std::vector<double> aw(a.size()), bw(b.size());
  std::transform(a.begin(), a.end(), aw.begin(), warp);
  std::transform(b.begin(), b.end(), bw.begin(), warp);
  for (RankMethod m : {RankMethod::Exact, RankMethod::Approx}) {
    TestResult t1 = wilcoxon_rank_sum(a, b, Alternative::Less, m);
    TestResult t2 = wilcoxon_rank_sum(aw, bw, Alternative::Less, m);
    CHECK(t1.p_value == doctest::Approx(t2.p_value).epsilon(1e-14));
    CHECK(t1.statistic == doctest::Approx(t2.statistic).epsilon(1e-14));
  }
}

TEST_CASE("kruskal-wallis hand example") {
  std::vector<std::vector<double>> groups = {{1, 2}, {3, 4}, {5, 6}};

  SUBCASE("chi-square tail") {
    TestResult t = kruskal_wallis(groups, RankMethod::Approx);
    CHECK(t.statistic == doctest::Approx(32.0 / 7.0).epsilon(1e-12));
    CHECK(t.p_value == doctest::Approx(0.10170139230422694).epsilon(1e-12));
    CHECK(t.p_method == PMethod::ChiSquare);
  }
  SUBCASE("exact enumeration") {
    TestResult t = kruskal_wallis(groups, RankMethod::Auto);
    CHECK(t.p_method == PMethod::Exact);
    CHECK(t.p_value == doctest::Approx(1.0 / 15.0).epsilon(1e-12));
  }
}

TEST_CASE("kruskal-wallis degenerate and separated inputs") {
  SUBCASE("identical groups") {
    TestResult t = kruskal_wallis({{2, 2}, {2, 2}, {2, 2}}, RankMethod::Auto);
    CHECK(t.degenerate);
    CHECK(t.statistic == 0.0);
    CHECK(t.p_value == 1.0);
  }
  SUBCASE("separation at n=15") {
    std::vector<std::vector<double>> groups = {
        {1, 2, 3, 4, 5}, {11, 12, 13, 14, 15}, {21, 22, 23, 24, 25}};
    TestResult t = kruskal_wallis(groups, RankMethod::Auto);
    CHECK(t.p_value < 1e-3);
  }
  SUBCASE("needs at least two groups") {
    CHECK_THROWS_AS(kruskal_wallis({{1.0, 2.0}}, RankMethod::Auto), Error);
  }
}

TEST_CASE("kruskal-wallis agrees with the oracle") {
  rng::Rng rng(77012);
  for (int round = 0; round < 12; ++round) {
    std::vector<std::vector<double>> groups(3);
    for (auto& g : groups) {
      g.resize(2 + rng.below(3));
      for (auto& v : g) v = std::floor(rng.uniform01() * 8);
    }
    double h_ref = oracle::kruskal_wallis_h(groups);
    TestResult t = kruskal_wallis(groups, RankMethod::Approx);
    if (std::isnan(h_ref)) {
      CHECK(t.degenerate);
      continue;
    }
    CHECK(t.statistic == doctest::Approx(h_ref).epsilon(1e-10));
    TestResult te = kruskal_wallis(groups, RankMethod::Exact);
    CHECK(te.p_value == doctest::Approx(oracle::kw_exact_p(groups)).epsilon(1e-10));
  }
}

TEST_CASE("exact and chi-square tails agree for moderate samples") {
  rng::Rng rng(300);
  std::vector<std::vector<double>> groups(3);
  for (auto& g : groups) {
    g.resize(5);
    for (auto& v : g) v = rng.normal();
  }
  TestResult exact = kruskal_wallis(groups, RankMethod::Exact);
  TestResult approx = kruskal_wallis(groups, RankMethod::Approx);
  CHECK(std::abs(exact.p_value - approx.p_value) < 0.05);
}

TEST_CASE("dunn post hoc comparisons") {
  std::vector<std::vector<double>> groups = {
      {1, 2, 3, 4, 5, 6}, {4, 5, 6, 7, 8, 9}, {12, 13, 14, 15, 16, 17}};
  std::vector<std::string> labels = {"human", "fast", "slow"};
  std::vector<TestResult> pairs = dunn_posthoc(groups, labels);
  REQUIRE(pairs.size() == 3);

  SUBCASE("labels and ordering") {
    CHECK(pairs[0].group_labels == std::vector<std::string>{"human", "fast"});
    CHECK(pairs[1].group_labels == std::vector<std::string>{"human", "slow"});
    CHECK(pairs[2].group_labels == std::vector<std::string>{"fast", "slow"});
    for (const auto& t : pairs) CHECK(t.correction == Correction::Bonferroni);
  }
  SUBCASE("bonferroni is three times the raw two-sided p, capped") {
    for (const auto& t : pairs) {
      REQUIRE(t.z.has_value());
      double raw = 2.0 * normal_cdf(-std::abs(*t.z));
      CHECK(t.p_value == doctest::Approx(std::min(1.0, 3.0 * raw)).epsilon(1e-12));
    }
  }
  SUBCASE("wider separation means larger |z|") {
    CHECK(std::abs(*pairs[1].z) > std::abs(*pairs[0].z));
  }
  SUBCASE("identical groups give p of one") {
    auto same = dunn_posthoc({{1, 1}, {1, 1}, {1, 1}}, {"a", "b", "c"});
    for (const auto& t : same) {
      CHECK(t.degenerate);
      CHECK(t.p_value == 1.0);
    }
  }
}

TEST_CASE("dunn z values are symmetric under group swap") {
  std::vector<std::vector<double>> groups = {{1, 5, 9, 2}, {3, 7, 11, 8}, {2, 6, 10, 4}};
  auto fwd = dunn_posthoc(groups, {"a", "b", "c"});
  auto rev = dunn_posthoc({groups[1], groups[0], groups[2]}, {"b", "a", "c"});
  CHECK(*fwd[0].z == doctest::Approx(-*rev[0].z).epsilon(1e-14));
  CHECK(fwd[0].p_value == doctest::Approx(rev[0].p_value).epsilon(1e-14));
}
