// Copyright 2026 The Proxy Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "proxy_audit/decomposition.h"
#include "proxy_audit/measures.h"
#include "support/fixtures.h"
#include "support/random_programs.h"

namespace proxy_audit {
namespace {

using testing::ModelOrFail;
using testing::ParseOrFail;
using testing::Retailer;

// Reference entropy of a probability vector, in bits.
double H(const std::vector<double>& probs) {
  double h = 0;
  for (double p : probs) {
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

Decomposition Dec(const Program& p, const std::string& position) {
  absl::StatusOr<Position> q = Position::Parse(position);
  EXPECT_TRUE(q.ok());
  absl::StatusOr<Decomposition> d = MakeDecomposition(p, {*q});
  EXPECT_TRUE(d.ok()) << d.status();
  return *std::move(d);
}

struct Measured {
  MeasureCache cache;
  double influence;
};

Measured Measure(const Decomposition& d, const Population& pop,
                 bool allow_protected = false) {
  MeasureOptions opts;
  opts.allow_protected = allow_protected;
  auto ctx = ProgramContext::Create(d.parent, pop, opts);
  EXPECT_TRUE(ctx.ok()) << ctx.status();
  absl::StatusOr<MeasureCache> cache = BuildCache(d, **ctx);
  EXPECT_TRUE(cache.ok()) << cache.status();
  absl::StatusOr<double> inf = InfluenceExact(d, **ctx, *cache);
  EXPECT_TRUE(inf.ok()) << inf.status();
  return {*std::move(cache), *inf};
}

TEST(AssociationTest, IdenticalColumnsArePerfectProxies) {
  Population pop = Retailer();
  std::span<const Value> z = pop.protected_values();
  EXPECT_DOUBLE_EQ(Association(z, z), 1.0);
}

TEST(AssociationTest, IndependentColumnsHaveZeroAssociation) {
  std::vector<Value> x = {0, 1, 0, 1, 0, 1, 0, 1};
  std::vector<Value> z = {0, 0, 1, 1, 0, 0, 1, 1};
  EXPECT_NEAR(Association(x, z), 0.0, 1e-12);
}

TEST(AssociationTest, ThreeQuarterAgreementClosedForm) {
  // Joint law (3/8, 1/8, 1/8, 3/8): H(X|Z) = H(Z|X) = h(1/4).
  std::vector<Value> x = {0, 0, 0, 1, 1, 1, 1, 0};
  std::vector<Value> z = {0, 0, 0, 0, 1, 1, 1, 1};
  const double joint = H({3.0 / 8, 1.0 / 8, 1.0 / 8, 3.0 / 8});
  const double conditional = H({0.25, 0.75});
  const double expected = 1 - 2 * conditional / joint;
  EXPECT_NEAR(expected, 0.10419, 1e-5);
  EXPECT_NEAR(Association(x, z), expected, 1e-12);
}

TEST(AssociationTest, ConstantsHaveZeroAssociation) {
  std::vector<Value> c(6, 1.0);
  std::vector<Value> z = {0, 1, 0, 1, 1, 0};
  EXPECT_EQ(Association(c, c), 0.0);
  EXPECT_EQ(Association(c, z), 0.0);
  EXPECT_EQ(Association(z, c), 0.0);
}

TEST(AssociationTest, EntropiesAreBaseTwo) {
  std::vector<Value> x = {0, 1, 2, 3};
  Entropies h = EntropiesOf(Tabulate(Encode(x), Encode(x)));
  EXPECT_NEAR(h.x, 2.0, 1e-12);
  EXPECT_NEAR(h.joint, 2.0, 1e-12);
}

TEST(AssociationTest, RenamingInvarianceSymmetryAndBounds) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 20 + rng() % 100;
    const int kx = 2 + rng() % 5, kz = 2 + rng() % 3;
    std::vector<Value> x(n), z(n);
    for (size_t i = 0; i < n; ++i) {
      z[i] = rng() % kz;
      x[i] = (rng() % 3 == 0) ? z[i] : rng() % kx;
    }
    const int levels = std::max(kx, kz);
    std::vector<Value> image(levels);
    for (int v = 0; v < levels; ++v) image[v] = 10.0 * v - 4.5;
    std::shuffle(image.begin(), image.end(), rng);
    std::vector<Value> renamed(n);
    for (size_t i = 0; i < n; ++i) renamed[i] = image[static_cast<int>(x[i])];

    const double d = Association(x, z);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_NEAR(Association(renamed, z), d, 1e-12) << trial;
    EXPECT_NEAR(Association(z, x), d, 1e-12) << trial;
  }
}

TEST(HoeffdingTest, SampleSizes) {
  EXPECT_EQ(HoeffdingSampleSize(0.05, 0.05), 738u);
  EXPECT_EQ(HoeffdingSampleSize(0.02, 0.01), 6623u);
  EXPECT_EQ(HoeffdingSampleSize(0.9, 0.9), 1u);
}

constexpr char kMasked[] = "models/retailer_masked.json";

TEST(InfluenceTest, MaskedGuardHasInfluenceOneHalf) {
  Program p = ModelOrFail(kMasked);
  Measured m = Measure(Dec(p, "1"), Retailer());
  EXPECT_NEAR(m.cache.association, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.cache.reach_prob, 1.0);
  EXPECT_NEAR(m.influence, 0.5, 1e-12);
  EXPECT_EQ(m.cache.range.size(), 2u);
}

TEST(InfluenceTest, ThenBranchIsReachedByHalfTheRows) {
  Program p = ModelOrFail(kMasked);
  Measured m = Measure(Dec(p, "2"), Retailer());
  EXPECT_DOUBLE_EQ(m.cache.reach_prob, 0.5);
  EXPECT_EQ(m.cache.reached_rows.size(), 4u);
}

TEST(InfluenceTest, BooleanRangeHasTwoValues) {
  Program p = ModelOrFail(kMasked);
  Measured m = Measure(Dec(p, "2.1"), Retailer());
  EXPECT_EQ(m.cache.range.size(), 2u);
  EXPECT_DOUBLE_EQ(m.cache.range[0].second + m.cache.range[1].second, 1.0);
}

TEST(InfluenceTest, ConstantSubtermHasNoInfluence) {
  Program p = ModelOrFail(kMasked);
  Decomposition d = Dec(p, "2.2");
  Measured m = Measure(d, Retailer());
  EXPECT_EQ(m.influence, 0.0);
  EXPECT_EQ(m.cache.association, 0.0);
  EstimatorConfig cfg;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    auto ctx = ProgramContext::Create(p, Retailer(), {});
    ASSERT_TRUE(ctx.ok());
    absl::StatusOr<double> s = InfluenceSampled(d, **ctx, m.cache, cfg);
    ASSERT_TRUE(s.ok());
    EXPECT_EQ(*s, 0.0);
  }
}

TEST(InfluenceTest, UnreachedBranchHasNoInfluence) {
  Population pop = Retailer();
  Program p = ParseOrFail(
      "lambda purchase, engagement. ite(purchase <= -1, engagement, 1)");
  Measured m = Measure(Dec(p, "2"), pop);
  EXPECT_EQ(m.cache.reach_prob, 0.0);
  EXPECT_EQ(m.influence, 0.0);
}

// Every decomposition of a program over a population: factorized and direct
// influence agree.
void ExpectFactorizationMatchesDirect(const Program& p, const Population& pop,
                                      bool allow_protected) {
  MeasureOptions opts;
  opts.allow_protected = allow_protected;
  auto ctx = ProgramContext::Create(p, pop, opts);
  ASSERT_TRUE(ctx.ok()) << ctx.status();
  EnumerationResult all = EnumerateDecompositions(p, {});
  for (const Decomposition& d : all.decompositions) {
    absl::StatusOr<MeasureCache> cache = BuildCache(d, **ctx);
    ASSERT_TRUE(cache.ok());
    absl::StatusOr<double> exact = InfluenceExact(d, **ctx, *cache);
    absl::StatusOr<double> direct = InfluenceDirect(d, pop, allow_protected);
    ASSERT_TRUE(exact.ok() && direct.ok());
    EXPECT_NEAR(*exact, *direct, 1e-12) << Print(p) << " at "
                                         << d.positions[0].ToString();
    EXPECT_GE(*exact, 0.0);
    EXPECT_LE(*exact, 1.0);
  }
}

TEST(InfluenceTest, FactorizationMatchesDirectOnMicroPopulations) {
  Population retailer = Retailer();
  Population retailer64 = testing::PopulationOrDie("retailer64.csv", "pregnant");
  for (const char* model :
       {"models/retailer_masked.json", "models/retailer_proxy.json",
        "models/retailer_no_use.json", "models/retailer_no_use_purchase.json"}) {
    ExpectFactorizationMatchesDirect(ModelOrFail(model), retailer, false);
    ExpectFactorizationMatchesDirect(ModelOrFail(model), retailer64, false);
  }
  ExpectFactorizationMatchesDirect(ModelOrFail("models/retailer_explicit.json"),
                                   retailer, true);
  ExpectFactorizationMatchesDirect(
      ParseOrFail("lambda purchase, engagement. "
                  "ite(purchase <= 1 && engagement == 0, purchase + engagement,"
                  " purchase * 2 - engagement)"),
      retailer, false);
}

TEST(InfluenceTest, FactorizationMatchesDirectOnRandomTrees) {
  testing::Rng rng(5);
  const std::vector<std::string> features = {"a", "b", "c"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> rows =
        testing::RandomRows(rng, 10 + rng() % 30, 4);
    for (auto& r : rows) r[3] = static_cast<int>(r[3]) % 2;
    Population pop = testing::FromRows({"a", "b", "c", "z"}, rows, "z");
    Program p = Program::CreateOrDie(
        testing::RealParams(features),
        testing::RandomTree(rng, features, 3, {0, 1}));
    ExpectFactorizationMatchesDirect(p, pop, false);
  }
}

TEST(InfluenceSampledTest, HoeffdingContractOnMaskedGuard) {
  Program p = ModelOrFail(kMasked);
  Population pop = Retailer();
  Decomposition d = Dec(p, "1");
  auto ctx = ProgramContext::Create(p, pop, {});
  ASSERT_TRUE(ctx.ok());
  absl::StatusOr<MeasureCache> cache = BuildCache(d, **ctx);
  ASSERT_TRUE(cache.ok());
  EstimatorConfig cfg{.alpha = 0.02, .beta = 0.01, .seed = 0};
  int within = 0;
  for (uint64_t seed = 1; seed <= 200; ++seed) {
    cfg.seed = seed;
    absl::StatusOr<double> est = InfluenceSampled(d, **ctx, *cache, cfg);
    ASSERT_TRUE(est.ok());
    within += std::abs(*est - 0.5) <= 0.02;
  }
  EXPECT_GE(within, 195);
}

TEST(InfluenceSampledTest, DeterministicAndConvergent) {
  Program p = ModelOrFail(kMasked);
  Population pop = Retailer();
  Decomposition d = Dec(p, "2");
  auto ctx = ProgramContext::Create(p, pop, {});
  ASSERT_TRUE(ctx.ok());
  absl::StatusOr<MeasureCache> cache = BuildCache(d, **ctx);
  ASSERT_TRUE(cache.ok());
  absl::StatusOr<double> exact = InfluenceExact(d, **ctx, *cache);
  ASSERT_TRUE(exact.ok());
  for (double alpha : {0.1, 0.05, 0.02}) {
    EstimatorConfig cfg{.alpha = alpha, .beta = 0.01, .seed = 17};
    absl::StatusOr<double> a = InfluenceSampled(d, **ctx, *cache, cfg);
    absl::StatusOr<double> b = InfluenceSampled(d, **ctx, *cache, cfg);
    ASSERT_TRUE(a.ok() && b.ok());
    EXPECT_EQ(*a, *b);
    EXPECT_LE(std::abs(*a - *exact), alpha) << alpha;
  }
}

TEST(BinningTest, ContinuousOutputsAreBinned) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 200; ++i) rows.push_back({i * 0.01, i < 100 ? 0.0 : 1.0});
  Population pop = testing::FromRows({"x", "z"}, rows, "z");
  Program p = ParseOrFail("lambda x. x * 3");
  Measured m = Measure(Dec(p, "ε"), pop);
  EXPECT_EQ(m.cache.table.x_levels, 10u);
  EXPECT_GT(m.cache.association, 0.2);
}

}  // namespace
}  // namespace proxy_audit
