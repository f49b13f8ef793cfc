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
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "proxy_audit/canonical.h"
#include "proxy_audit/decomposition.h"
#include "proxy_audit/detection.h"
#include "proxy_audit/syntax.h"
#include "support/brute_force.h"
#include "support/fixtures.h"
#include "support/random_programs.h"

namespace proxy_audit {
namespace {

using testing::ModelOrFail;
using testing::ParseOrFail;
using testing::Retailer;

DetectionConfig Config(double epsilon, double delta) {
  DetectionConfig cfg;
  cfg.epsilon = epsilon;
  cfg.delta = delta;
  return cfg;
}

DetectionResult DetectOrFail(const Program& p, const Population& pop,
                             const DetectionConfig& cfg) {
  absl::StatusOr<DetectionResult> r = ProxyDetect(p, pop, cfg);
  EXPECT_TRUE(r.ok()) << r.status();
  return r.ok() ? *std::move(r) : DetectionResult{};
}

std::set<std::string> P1Texts(const std::vector<Witness>& ws) {
  std::set<std::string> out;
  for (const Witness& w : ws) out.insert(Print(w.decomposition.p1.expr()));
  return out;
}

// Witness sets agree within `tol`, matched by fingerprint and positions
// since influences tied up to rounding may sort either way.
void ExpectSameWitnesses(std::vector<Witness> a, std::vector<Witness> b,
                         double tol) {
  ASSERT_EQ(a.size(), b.size());
  auto by_key = [](const Witness& x, const Witness& y) {
    return std::tie(x.fingerprint, x.positions) <
           std::tie(y.fingerprint, y.positions);
  };
  std::sort(a.begin(), a.end(), by_key);
  std::sort(b.begin(), b.end(), by_key);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].fingerprint, b[i].fingerprint);
    EXPECT_EQ(a[i].positions, b[i].positions);
    EXPECT_NEAR(a[i].association, b[i].association, tol);
    EXPECT_NEAR(a[i].influence, b[i].influence, tol);
    EXPECT_NEAR(a[i].reach_prob, b[i].reach_prob, tol);
  }
}

TEST(ProxyDetectTest, MaskedRetailerFlagsOnlyTheGuard) {
  Program p = ModelOrFail("models/retailer_masked.json");
  Population pop = Retailer();
  DetectionResult r = DetectOrFail(p, pop, Config(0.9, 0.4));
  ASSERT_FALSE(r.witnesses.empty());
  EXPECT_THAT(P1Texts(r.witnesses), ::testing::ElementsAre("purchase <= 1"));
  for (const Witness& w : r.witnesses) {
    EXPECT_NEAR(w.association, 1.0, 1e-9);
    EXPECT_NEAR(w.influence, 0.5, 1e-9);
    EXPECT_EQ(w.reach_prob, 1.0);
    EXPECT_EQ(w.p2_text, "lambda purchase, engagement, u:bool. "
                         "ite(u, ite(engagement <= 0, 0, 1), "
                         "ite(engagement <= 0, 1, 0))");
    EXPECT_THAT(w.mentions, ::testing::ElementsAre("purchase"));
  }
  absl::StatusOr<std::vector<Value>> out = ProgramValues(p, pop, false);
  ASSERT_TRUE(out.ok());
  EXPECT_NEAR(Association(*out, pop.protected_values()), 0.0, 1e-9);
  EXPECT_GE(r.stats.decomposition_count, r.witnesses.size());
  EXPECT_EQ(r.stats.dataset_size, 8u);
  EXPECT_EQ(r.stats.program_size, p.size());
  EXPECT_EQ(r.stats.max_range, 4u);
  EXPECT_DOUBLE_EQ(r.stats.min_branch_balance, 0.5);
  EXPECT_LT(r.stats.wall_time_seconds, 1.0);
}

TEST(ProxyDetectTest, PurchaseAloneIsAWeakerAssociate) {
  Program p = ModelOrFail("models/retailer_masked.json");
  DetectionConfig cfg = Config(0, 0);
  cfg.measure_all_influences = true;
  DetectionResult r = DetectOrFail(p, Retailer(), cfg);
  bool seen = false;
  for (const SubexprRecord& rec : r.subexpressions) {
    if (rec.p1_text == "purchase") {
      seen = true;
      EXPECT_NEAR(rec.association, 0.5, 1e-12);
    }
  }
  EXPECT_TRUE(seen);
}

TEST(ProxyDetectTest, NoUseModelHasNoWitnesses) {
  Program p = ModelOrFail("models/retailer_no_use.json");
  DetectionConfig cfg = Config(0.1, 0);
  cfg.measure_all_influences = true;
  DetectionResult r = DetectOrFail(p, Retailer(), cfg);
  EXPECT_TRUE(r.witnesses.empty());
  ASSERT_FALSE(r.subexpressions.empty());
  for (const SubexprRecord& rec : r.subexpressions) {
    EXPECT_NEAR(rec.association, 0.0, 1e-12) << rec.p1_text;
  }
}

TEST(ProxyDetectTest, PurchaseFormOfTheNoUseModelLeaksThroughItsLeaves) {
  // The guard P ∈ {a1, n1} is independent of Z, but its operand `purchase`
  // determines Z up to two values.
  Program p = ModelOrFail("models/retailer_no_use_purchase.json");
  DetectionConfig cfg = Config(0.1, 0);
  cfg.measure_all_influences = true;
  DetectionResult r = DetectOrFail(p, Retailer(), cfg);
  for (const SubexprRecord& rec : r.subexpressions) {
    if (rec.p1_text == "purchase == 0 || purchase == 2") {
      EXPECT_NEAR(rec.association, 0.0, 1e-12);
    }
  }
  EXPECT_THAT(P1Texts(r.witnesses), ::testing::Contains("purchase"));
}

TEST(ProxyDetectTest, ConstantProgram) {
  DetectionResult r =
      DetectOrFail(ParseOrFail("lambda purchase. 3"), Retailer(), Config(0, 0));
  EXPECT_TRUE(r.witnesses.empty());
  EXPECT_EQ(r.stats.decomposition_count, 0u);
}

TEST(ProxyDetectTest, ExplicitUseIsFlagged) {
  Program p = ModelOrFail("models/retailer_explicit.json");
  DetectionConfig cfg = Config(1.0, 0.4);
  EXPECT_FALSE(ProxyDetect(p, Retailer(), cfg).ok());
  cfg.measure.allow_protected = true;
  DetectionResult r = DetectOrFail(p, Retailer(), cfg);
  EXPECT_THAT(P1Texts(r.witnesses), ::testing::Contains("pregnant == 1"));
  for (const Witness& w : r.witnesses) {
    EXPECT_NEAR(w.influence, 0.5, 1e-9);
    EXPECT_NEAR(w.association, 1.0, 1e-12);
  }
}

TEST(ProxyDetectTest, SoundnessByRemeasurement) {
  testing::Rng rng(8);
  const std::vector<std::string> f = {"a", "b", "c"};
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::vector<double>> rows = testing::RandomRows(rng, 40, 4);
    for (auto& r : rows) r[3] = static_cast<int>(r[0] + r[3]) % 2;
    Population pop = testing::FromRows({"a", "b", "c", "z"}, rows, "z");
    Program p = Program::CreateOrDie(testing::RealParams(f),
                                     testing::RandomTree(rng, f, 3, {0, 1}));
    DetectionConfig cfg = Config(0.05, 0.05);
    for (const Witness& w : DetectOrFail(p, pop, cfg).witnesses) {
      absl::StatusOr<Decomposition> d = MakeDecomposition(p, w.positions);
      ASSERT_TRUE(d.ok());
      absl::StatusOr<std::vector<Value>> x = ProgramValues(d->p1, pop, false);
      ASSERT_TRUE(x.ok());
      EXPECT_GE(Association(*x, pop.protected_values()), cfg.epsilon);
      absl::StatusOr<double> infl = InfluenceDirect(*d, pop, false);
      ASSERT_TRUE(infl.ok());
      EXPECT_GE(*infl, cfg.delta);
      absl::StatusOr<Program> back =
          SubstituteAll(d->p1, d->fresh_var, d->p2);
      ASSERT_TRUE(back.ok());
      EXPECT_TRUE(CanonicallyEqual(*back, p));
    }
  }
}

TEST(ReferenceDetectTest, AgreesOnRetailerModels) {
  Population pop = Retailer();
  for (const char* model :
       {"models/retailer_masked.json", "models/retailer_no_use.json",
        "models/retailer_no_use_purchase.json", "models/retailer_proxy.json"}) {
    Program p = ModelOrFail(model);
    for (double eps : {0.0, 0.3, 0.9}) {
      DetectionConfig cfg = Config(eps, 0.1);
      absl::StatusOr<std::vector<Witness>> ref = ReferenceDetect(p, pop, cfg);
      ASSERT_TRUE(ref.ok());
      ExpectSameWitnesses(DetectOrFail(p, pop, cfg).witnesses, *ref, 1e-12);
    }
  }
  EXPECT_TRUE(
      ReferenceDetect(ParseOrFail("lambda purchase. 2"), pop, Config(0, 0))
          ->empty());
}

TEST(ReferenceDetectTest, AgreesOnRandomTrees) {
  testing::Rng rng(77);
  const std::vector<std::string> f = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 60; ++trial) {
    const size_t n = 10 + rng() % 60;
    std::vector<std::vector<double>> rows = testing::RandomRows(rng, n, 5);
    for (auto& r : rows) {
      r[4] = (rng() % 3 == 0) ? static_cast<int>(rng() % 2)
                              : static_cast<int>(r[trial % 4]) % 2;
    }
    Population pop = testing::FromRows({"a", "b", "c", "d", "z"}, rows, "z");
    Program p = Program::CreateOrDie(
        testing::RealParams(f),
        testing::RandomTree(rng, f, 1 + trial % 4, {0, 1, 2}));
    DetectionConfig cfg = Config(0.1 * (trial % 5), 0.05 * (trial % 3));
    absl::StatusOr<std::vector<Witness>> ref = ReferenceDetect(p, pop, cfg);
    ASSERT_TRUE(ref.ok());
    ExpectSameWitnesses(DetectOrFail(p, pop, cfg).witnesses, *ref, 1e-9);
  }
}

TEST(AxiomTest, SyntacticDummy) {
  Population pop = Retailer();
  Program p = ModelOrFail("models/retailer_masked.json");
  std::vector<Param> params = p.params();
  params.insert(params.begin(), Param{"variant", Type::kReal});
  Program padded = Program::CreateOrDie(params, p.body());
  DetectionConfig cfg = Config(0.2, 0.1);
  ExpectSameWitnesses(DetectOrFail(p, pop, cfg).witnesses,
                      DetectOrFail(padded, pop, cfg).witnesses, 0);
}

TEST(AxiomTest, SyntacticIndependence) {
  // Full product of input levels with Z: inputs are jointly independent of Z.
  std::vector<std::vector<double>> rows;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int z = 0; z < 2; ++z) rows.push_back({1.0 * a, 1.0 * b, 1.0 * z});
    }
  }
  Population pop = testing::FromRows({"a", "b", "z"}, rows, "z");
  testing::Rng rng(21);
  const std::vector<std::string> f = {"a", "b"};
  for (int trial = 0; trial < 40; ++trial) {
    Program p = trial % 2 == 0
                    ? Program::CreateOrDie(
                          testing::RealParams(f),
                          testing::RandomTree(rng, f, 4, {0, 1, 2}))
                    : testing::RandomProgram(rng, f, 4);
    DetectionConfig cfg = Config(1e-9, 0);
    DetectionResult r = DetectOrFail(p, pop, cfg);
    EXPECT_TRUE(r.witnesses.empty()) << Print(p);
    for (const SubexprRecord& rec : r.subexpressions) {
      EXPECT_NEAR(rec.association, 0.0, 1e-12);
    }
  }
}

TEST(AxiomTest, XorCancellationIsStillFlagged) {
  Population pop = testing::FromRows(
      {"x", "z"}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, "z");
  Program p = ParseOrFail("lambda x, z. ite(ite(x == z, 0, 1) == z, 0, 1)");
  absl::StatusOr<std::vector<Value>> out = ProgramValues(p, pop, true);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(*out, std::vector<Value>({0, 0, 1, 1}));
  EXPECT_NEAR(Association(*out, pop.protected_values()), 0.0, 1e-12);

  DetectionConfig cfg = Config(1.0, 1e-9);
  cfg.measure.allow_protected = true;
  DetectionResult r = DetectOrFail(p, pop, cfg);
  EXPECT_FALSE(r.witnesses.empty());
  EXPECT_THAT(P1Texts(r.witnesses), ::testing::Contains("z"));
}

// A complete tree of height h with a distinct feature on every guard.
Program CompleteTree(int h) {
  int next = 0;
  std::vector<Param> params;
  std::function<ExprPtr(int)> build = [&](int depth) -> ExprPtr {
    if (depth == h) return Expr::Real(next % 2);
    const std::string name = "f" + std::to_string(next++);
    params.push_back({name, Type::kReal});
    ExprPtr guard = Expr::Rel(RelOp::kLe, Expr::Var(name), Expr::Real(0.5));
    ExprPtr left = build(depth + 1);
    return Expr::Ite(guard, left, build(depth + 1));
  };
  ExprPtr body = build(0);
  return Program::CreateOrDie(params, body);
}

TEST(CountTest, CompleteTreesMatchBruteForceAndGrowLikeTwoToTheH) {
  std::vector<double> counts;
  for (int h = 1; h <= 5; ++h) {
    Program p = CompleteTree(h);
    DecompositionCount c = CountDecompositions(p, {});
    EXPECT_FALSE(c.incomplete);
    EXPECT_EQ(c.count, EnumerateDecompositions(p, {}).decompositions.size());
    EXPECT_EQ(c.count, testing::BruteForceDecompositionCount(p.body(), 3));
    counts.push_back(static_cast<double>(c.count));
    EXPECT_LE(c.count, 3u << h);
  }
  for (size_t i = 1; i + 1 < counts.size(); ++i) {
    EXPECT_LE(counts[i + 1] / counts[i], 2.5) << "h=" << i + 1;
  }
  EXPECT_EQ(CountDecompositions(ParseOrFail("lambda x. 3"), {}).count, 0u);
}

TEST(ProxyDetectTest, SampledEstimatorFindsTheMaskedGuard) {
  Program p = ModelOrFail("models/retailer_masked.json");
  DetectionConfig cfg = Config(0.9, 0.4);
  cfg.estimator = Estimator::kSampled;
  cfg.sampling = {.alpha = 0.02, .beta = 0.01, .seed = 5};
  DetectionResult a = DetectOrFail(p, Retailer(), cfg);
  EXPECT_THAT(P1Texts(a.witnesses), ::testing::ElementsAre("purchase <= 1"));
  for (const Witness& w : a.witnesses) EXPECT_NEAR(w.influence, 0.5, 0.02);
  ExpectSameWitnesses(a.witnesses, DetectOrFail(p, Retailer(), cfg).witnesses,
                      0);
}

TEST(ProxyDetectTest, InfluenceIsSkippedBelowEpsilon) {
  Program p = ModelOrFail("models/retailer_masked.json");
  DetectionResult r = DetectOrFail(p, Retailer(), Config(0.9, 0.4));
  size_t associated = 0;
  for (const SubexprRecord& rec : r.subexpressions) {
    EXPECT_EQ(rec.influence.has_value(), rec.association >= 0.9);
    associated += rec.association >= 0.9;
  }
  EXPECT_EQ(r.stats.influence_evaluations, associated);
}

TEST(ProxyDetectTest, SubexpressionParentsFormAForest) {
  Program p = ModelOrFail("models/tree_example.json");
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 27; ++i) {
    rows.push_back({i % 3 * 0.5, i / 3 % 3 * 1.0, i / 9 - 0.5, i % 2 * 1.0});
  }
  Population pop = testing::FromRows({"x1", "x2", "x3", "z"}, rows, "z");
  DetectionResult r = DetectOrFail(p, pop, Config(0, 0));
  ASSERT_EQ(r.subexpressions.size(), r.stats.decomposition_count);
  size_t roots = 0;
  for (size_t i = 0; i < r.subexpressions.size(); ++i) {
    std::set<size_t> seen = {i};
    std::optional<size_t> cur = r.subexpressions[i].parent;
    roots += !cur.has_value();
    while (cur) {
      ASSERT_TRUE(seen.insert(*cur).second) << "cycle";
      cur = r.subexpressions[*cur].parent;
    }
  }
  EXPECT_EQ(roots, 1u);
}

TEST(ProxyDetectTest, LimitsAreReported) {
  Program p = ParseOrFail("lambda a, b, c, d. a + b + c + d + a * b");
  DetectionConfig cfg = Config(0, 0);
  cfg.limits.max_decompositions = 3;
  Population pop = testing::FromRows({"a", "b", "c", "d", "z"},
                                     {{0, 1, 2, 3, 0}, {1, 0, 3, 2, 1}}, "z");
  DetectionResult r = DetectOrFail(p, pop, cfg);
  EXPECT_TRUE(r.stats.incomplete);
  EXPECT_EQ(r.stats.decomposition_count, 3u);
}

TEST(ProxyDetectTest, RejectsBadThresholds) {
  Program p = ModelOrFail("models/retailer_masked.json");
  EXPECT_EQ(ProxyDetect(p, Retailer(), Config(1.5, 0)).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(ProxyDetect(p, Retailer(), Config(0.5, -1)).status().code(),
            absl::StatusCode::kInvalidArgument);
}

}  // namespace
}  // namespace proxy_audit
