#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "gibbs/models.hpp"

using namespace gibbs;

namespace {

// Visit every set partition of {1..n} as its vector of block sizes.
void for_each_partition(int n, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> sizes;
  std::function<void(int)> rec = [&](int i) {
    if (i == n) {
      fn(sizes);
      return;
    }
    for (size_t b = 0; b < sizes.size(); ++b) {  // indexed: rec() grows the vector
      ++sizes[b];
      rec(i + 1);
      --sizes[b];
    }
    sizes.push_back(1);
    rec(i + 1);
    sizes.pop_back();
  };
  rec(0);
}

// Visit every integer partition of n as a multiplicity map part -> count.
void for_each_multiplicity(int n, const std::function<void(const std::map<int, int>&)>& fn) {
  std::map<int, int> mult;
  std::function<void(int, int)> rec = [&](int rem, int max_part) {
    if (rem == 0) {
      fn(mult);
      return;
    }
    for (int p = std::min(rem, max_part); p >= 1; --p) {
      ++mult[p];
      rec(rem - p, p);
      if (--mult[p] == 0) mult.erase(p);
    }
  };
  rec(n, n);
}

struct GgCase {
  int n, k;
  double sigma, beta, log_v;
};

// Frozen from an independent 120-digit evaluation of the alternating-sum weight.
const GgCase kGgOracle[] = {
    {1, 1, 0.3, 0.5, 0.0},
    {2, 1, 0.3, 0.5, -0.17943634581351856},
    {2, 2, 0.3, 0.5, -0.87952206910573175},
    {3, 1, 0.3, 0.5, -0.97901641353093278},
    {3, 2, 0.3, 0.5, -1.6241231428624877},
    {3, 3, 0.3, 0.5, -1.9728280920375277},
    {5, 1, 0.3, 0.5, -3.6060405820916927},
    {5, 2, 0.3, 0.5, -4.1819407583176195},
    {5, 3, 0.3, 0.5, -4.4900237801182979},
    {5, 4, 0.3, 0.5, -4.5301962672186464},
    {5, 5, 0.3, 0.5, -4.327279657542457},
    {8, 1, 0.3, 0.5, -9.0959321287133749},
    {8, 2, 0.3, 0.5, -9.6068835048325596},
    {8, 3, 0.3, 0.5, -9.8745384568638909},
    {8, 4, 0.3, 0.5, -9.8937766979380546},
    {8, 5, 0.3, 0.5, -9.6814892676276615},
    {8, 6, 0.3, 0.5, -9.2653612267305292},
    {8, 7, 0.3, 0.5, -8.6734908881477487},
    {8, 8, 0.3, 0.5, -7.9298148004192775},
    {1, 1, 0.3, 2.0, 0.0},
    {2, 1, 0.3, 2.0, -0.539884413366208},
    {2, 2, 0.3, 2.0, -0.52419954044405935},
    {3, 1, 0.3, 2.0, -1.5667090598041062},
    {3, 2, 0.3, 2.0, -1.4785282639697178},
    {3, 3, 0.3, 2.0, -1.2987710407221831},
    {5, 1, 0.3, 2.0, -4.5039063419417566},
    {5, 2, 0.3, 2.0, -4.3227193741300437},
    {5, 3, 0.3, 2.0, -4.0584482302978817},
    {5, 4, 0.3, 2.0, -3.699993083946814},
    {5, 5, 0.3, 2.0, -3.2376685015134203},
    {8, 1, 0.3, 2.0, -10.308458249206698},
    {8, 2, 0.3, 2.0, -10.039899861605999},
    {8, 3, 0.3, 2.0, -9.6960918288667283},
    {8, 4, 0.3, 2.0, -9.268061116007403},
    {8, 5, 0.3, 2.0, -8.7476541123471481},
    {8, 6, 0.3, 2.0, -8.1284697442233278},
    {8, 7, 0.3, 2.0, -7.4066274693975327},
    {8, 8, 0.3, 2.0, -6.5811002008622439},
    {1, 1, 0.5, 0.5, 0.0},
    {2, 1, 0.5, 0.5, -0.31371444936042054},
    {2, 2, 0.5, 0.5, -0.45470340344360441},
    {3, 1, 0.5, 0.5, -1.2078553363527943},
    {3, 2, 0.5, 0.5, -1.2641779361512644},
    {3, 3, 0.5, 0.5, -1.0436561427704825},
    {5, 1, 0.5, 0.5, -3.9778403592340562},
    {5, 2, 0.5, 0.5, -3.9255094600803357},
    {5, 3, 0.5, 0.5, -3.6321882370562118},
    {5, 4, 0.5, 0.5, -3.1007170383564435},
    {5, 5, 0.5, 0.5, -2.3498105853693953},
    {8, 1, 0.5, 0.5, -9.6293643955212621},
    {8, 2, 0.5, 0.5, -9.4734920410321137},
    {8, 3, 0.5, 0.5, -9.1065588837519892},
    {8, 4, 0.5, 0.5, -8.5276163121787443},
    {8, 5, 0.5, 0.5, -7.7479896809088499},
    {8, 6, 0.5, 0.5, -6.7859555004670075},
    {8, 7, 0.5, 0.5, -5.6614671435596405},
    {8, 8, 0.5, 0.5, -4.3930531927138634},
    {1, 1, 0.5, 2.0, 0.0},
    {2, 1, 0.5, 2.0, -0.80897457773044264},
    {2, 2, 0.5, 2.0, -0.25187388531752901},
    {3, 1, 0.5, 2.0, -2.0386094733395234},
    {3, 2, 0.5, 2.0, -1.3862943611198906},
    {3, 3, 0.5, 2.0, -0.63990453157450249},
    {5, 1, 0.5, 2.0, -5.2922097944551584},
    {5, 2, 0.5, 2.0, -4.5142158561209586},
    {5, 3, 0.5, 2.0, -3.6514073107787096},
    {5, 4, 0.5, 2.0, -2.6957570999935089},
    {5, 5, 0.5, 2.0, -1.6409612113839291},
    {8, 1, 0.5, 2.0, -11.46202582595166},
    {8, 2, 0.5, 2.0, -10.56320063993618},
    {8, 3, 0.5, 2.0, -9.5885471291001776},
    {8, 4, 0.5, 2.0, -8.5322691049760447},
    {8, 5, 0.5, 2.0, -7.389631280168568},
    {8, 6, 0.5, 2.0, -6.1573465856075465},
    {8, 7, 0.5, 2.0, -4.833796616769998},
    {8, 8, 0.5, 2.0, -3.4190333635514479},
    {1, 1, 0.75, 0.5, 0.0},
    {2, 1, 0.75, 0.5, -0.47392088468399495},
    {2, 2, 0.75, 0.5, -0.16917530005201241},
    {3, 1, 0.75, 0.5, -1.4907881639548959},
    {3, 2, 0.75, 0.5, -1.0756891360859621},
    {3, 3, 0.75, 0.5, -0.39477808425868949},
    {5, 1, 0.75, 0.5, -4.4584389438999503},
    {5, 2, 0.75, 0.5, -3.899904636168019},
    {5, 3, 0.75, 0.5, -3.1155304140782029},
    {5, 4, 0.75, 0.5, -2.1120096778086806},
    {5, 5, 0.75, 0.5, -0.90665438866147678},
    {8, 1, 0.75, 0.5, -10.347680298262949},
    {8, 2, 0.75, 0.5, -9.6511100204656745},
    {8, 3, 0.75, 0.5, -8.761531943255704},
    {8, 4, 0.75, 0.5, -7.6822655418690348},
    {8, 5, 0.75, 0.5, -6.4240222042565586},
    {8, 6, 0.75, 0.5, -5.0014678962073742},
    {8, 7, 0.75, 0.5, -3.4302266731837863},
    {8, 8, 0.75, 0.5, -1.7250750922194666},
    {1, 1, 0.75, 2.0, 0.0},
    {2, 1, 0.75, 2.0, -1.0723893681717769},
    {2, 2, 0.75, 2.0, -0.089429732164684106},
    {3, 1, 0.75, 2.0, -2.5164217362393892},
    {3, 2, 0.75, 2.0, -1.4219012822394869},
    {3, 3, 0.75, 2.0, -0.2308921493136371},
    {5, 1, 0.75, 2.0, -6.1261602485493779},
    {5, 2, 0.75, 2.0, -4.881331462051417},
    {5, 3, 0.75, 2.0, -3.5497178220453198},
    {5, 4, 0.75, 2.0, -2.1250871049900128},
    {5, 5, 0.75, 2.0, -0.60308007278048715},
    {8, 1, 0.75, 2.0, -12.734128615681005},
    {8, 2, 0.75, 2.0, -11.342260789638794},
    {8, 3, 0.75, 2.0, -9.873444437185154},
    {8, 4, 0.75, 2.0, -8.3236807978843991},
    {8, 5, 0.75, 2.0, -6.6900993131870275},
    {8, 6, 0.75, 2.0, -4.9711133915829204},
    {8, 7, 0.75, 2.0, -3.1664363096531302},
    {8, 8, 0.75, 2.0, -1.2769639552158121},
};

}  // namespace

TEST_CASE("generalized gamma weights match the frozen high-precision oracle") {
  std::map<std::pair<double, double>, GibbsModel> models;
  for (const auto& c : kGgOracle) {
    auto key = std::make_pair(c.sigma, c.beta);
    if (!models.count(key)) models.emplace(key, GeneralizedGamma(c.sigma, c.beta));
    CHECK_THAT(log_weight(models.at(key), c.n, c.k),
               Catch::Matchers::WithinAbs(c.log_v, 1e-10));
  }
}

TEST_CASE("generalized gamma weights hold up at depth") {
  CHECK_THAT(log_weight(GibbsModel(GeneralizedGamma(0.5, 2.0)), 60, 25),
             Catch::Matchers::WithinAbs(-144.79762523519601, 1e-9));
  CHECK_THAT(log_weight(GibbsModel(GeneralizedGamma(0.35, 1.5)), 120, 40),
             Catch::Matchers::WithinAbs(-385.84774197035522, 1e-9));
}

TEST_CASE("dirichlet and poisson-dirichlet weights in closed form") {
  GibbsModel dp{Dirichlet(2.0)};
  CHECK_THAT(log_weight(dp, 3, 2), Catch::Matchers::WithinRel(std::log(4.0 / 24.0), 1e-13));
  GibbsModel py{PoissonDirichlet(0.5, 1.0)};
  CHECK_THAT(log_weight(py, 3, 2), Catch::Matchers::WithinRel(std::log(1.5 / 6.0), 1e-13));
  CHECK(log_weight(py, 1, 1) == 0.0);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Dirichlet(0.0), ValidationError);
  CHECK_THROWS_AS(Dirichlet(-1.0), ValidationError);
  CHECK_THROWS_AS(PoissonDirichlet(0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(PoissonDirichlet(1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(PoissonDirichlet(0.5, -0.5), ValidationError);
  CHECK_NOTHROW(PoissonDirichlet(0.5, -0.499));
  CHECK_THROWS_AS(GeneralizedGamma(0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(GeneralizedGamma(0.5, 0.0), ValidationError);
}

TEST_CASE("generalized gamma weights enforce the n cap") {
  GibbsModel m{GeneralizedGamma(0.5, 1.0)};
  CHECK_THROWS_AS(log_weight(m, 201, 5), NumericRangeError);
  GgWeightCache small(0.5, 1.0, 10);
  CHECK_THROWS_AS(small.log_weight(11, 2), NumericRangeError);
  CHECK_NOTHROW(small.log_weight(10, 2));
}

TEST_CASE("recursion residuals vanish") {
  GibbsModel dp{Dirichlet(7.3)};
  GibbsModel py{PoissonDirichlet(0.34, 33.0)};
  for (int n = 1; n <= 25; ++n)
    for (int k = 1; k <= n; ++k) {
      CHECK(recursion_residual(dp, n, k) < 1e-12);
      CHECK(recursion_residual(py, n, k) < 1e-12);
    }
  GibbsModel gg{GeneralizedGamma(0.45, 1.7)};
  for (int n = 1; n <= 12; ++n)
    for (int k = 1; k <= n; ++k) CHECK(recursion_residual(gg, n, k) < 1e-10);
}

TEST_CASE("eppf normalizes over set partitions") {
  std::vector<GibbsModel> models{GibbsModel(Dirichlet(2.5)),
                                 GibbsModel(PoissonDirichlet(0.6, 0.8)),
                                 GibbsModel(GeneralizedGamma(0.4, 1.2))};
  for (const auto& m : models) {
    for (int n : {1, 3, 7}) {
      std::vector<double> lps;
      for_each_partition(n, [&](const std::vector<int>& sizes) { lps.push_back(eppf_log(m, sizes)); });
      CHECK_THAT(log_sum_exp(lps), Catch::Matchers::WithinAbs(0.0, 1e-10));
    }
  }
}

TEST_CASE("eppf pinned dirichlet values") {
  GibbsModel dp{Dirichlet(2.0)};
  std::vector<int> two{2}, ones{1, 1};
  CHECK_THAT(std::exp(eppf_log(dp, two)), Catch::Matchers::WithinRel(1.0 / 3.0, 1e-12));
  CHECK_THAT(std::exp(eppf_log(dp, ones)), Catch::Matchers::WithinRel(2.0 / 3.0, 1e-12));
}

TEST_CASE("multiplicity law normalizes and matches pinned values") {
  std::vector<GibbsModel> models{GibbsModel(Dirichlet(1.4)),
                                 GibbsModel(PoissonDirichlet(0.3, 2.0)),
                                 GibbsModel(GeneralizedGamma(0.55, 0.9))};
  for (const auto& m : models) {
    std::vector<double> lps;
    for_each_multiplicity(6, [&](const std::map<int, int>& mult) {
      lps.push_back(multiplicity_log(m, mult));
    });
    CHECK_THAT(log_sum_exp(lps), Catch::Matchers::WithinAbs(0.0, 1e-10));
  }
  double theta = 2.0;
  GibbsModel dp{Dirichlet(theta)};
  CHECK_THAT(std::exp(multiplicity_log(dp, {{2, 1}})),
             Catch::Matchers::WithinRel(1.0 / (theta + 1.0), 1e-12));
  CHECK_THAT(std::exp(multiplicity_log(dp, {{1, 2}})),
             Catch::Matchers::WithinRel(theta / (theta + 1.0), 1e-12));
}

TEST_CASE("one-step predictive probabilities sum to one") {
  std::vector<int> freq{3, 1, 2};
  auto s = summarize_frequencies(freq);
  for (const auto& m : {GibbsModel(Dirichlet(4.0)), GibbsModel(PoissonDirichlet(0.7, 1.1)),
                        GibbsModel(GeneralizedGamma(0.25, 2.2))}) {
    double total = new_cluster_prob(m, s.n, s.j);
    for (int f : s.frequencies) total += existing_cluster_prob(m, s.n, s.j, f);
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-10));
  }
}

TEST_CASE("sample summaries are consistent") {
  auto s = summarize_multiplicities({{1, 40}, {2, 10}, {3, 4}, {4, 2}, {5, 2}, {10, 1}});
  CHECK(s.n == 100);
  CHECK(s.j == 59);
  CHECK(s.frequencies.size() == 59);
  auto s2 = summarize_frequencies(s.frequencies);
  CHECK(s2.multiplicities == s.multiplicities);
  CHECK_THROWS_AS(summarize_frequencies({2, 0}), ValidationError);
  CHECK_THROWS_AS(summarize_multiplicities({{0, 3}}), ValidationError);
  CHECK_THROWS_AS(summarize_multiplicities({{2, 0}}), ValidationError);
}

TEST_CASE("model grammar round-trips and validates") {
  for (const char* text : {"dp:theta=33", "py:sigma=0.612,theta=741.33", "gg:sigma=0.5,beta=2"}) {
    auto m = parse_model(text);
    auto again = parse_model(format_model(m));
    CHECK(format_model(again) == format_model(m));
  }
  auto m = parse_model("py:theta=-0.2,sigma=0.34");  // order-insensitive keys
  CHECK(std::get<PoissonDirichlet>(m).sigma == 0.34);
  CHECK(std::get<PoissonDirichlet>(m).theta == -0.2);

  CHECK_THROWS_AS(parse_model("zz:theta=1"), ValidationError);
  CHECK_THROWS_AS(parse_model("dp"), ValidationError);
  CHECK_THROWS_AS(parse_model("dp:"), ValidationError);
  CHECK_THROWS_AS(parse_model("dp:theta=1,theta=2"), ValidationError);
  CHECK_THROWS_AS(parse_model("dp:theta=1,sigma=0.5"), ValidationError);
  CHECK_THROWS_AS(parse_model("py:sigma=0.5"), ValidationError);
  CHECK_THROWS_AS(parse_model("dp:theta=abc"), ValidationError);
  CHECK_THROWS_AS(parse_model("dp:theta=1e999"), ValidationError);
  CHECK_THROWS_AS(parse_model("py:sigma=1.2,theta=1"), ValidationError);
}
