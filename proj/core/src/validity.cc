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

#include "proxy_audit/validity.h"

#include <algorithm>
#include <map>

#include "absl/status/status.h"
#include "proxy_audit/measures.h"
#include "proxy_audit/random.h"
#include "str.h"

namespace proxy_audit {

absl::Status ValidateConfig(const ValidityConfig& cfg) {
  if (cfg.folds < 2) return absl::InvalidArgumentError("need at least 2 folds");
  if (cfg.accept_threshold < 1 || cfg.accept_threshold > cfg.folds) {
    return absl::InvalidArgumentError(
        "accept threshold must lie in [1, folds]");
  }
  if (cfg.bootstrap_samples < 100) {
    return absl::InvalidArgumentError("need at least 100 bootstrap samples");
  }
  if (!(cfg.alpha_sig > 0 && cfg.alpha_sig < 1)) {
    return absl::InvalidArgumentError("significance must lie in (0, 1)");
  }
  return absl::OkStatus();
}

namespace {

struct Measurement {
  double association = 0;
  double influence = 0;
  double reach_prob = 0;
};

absl::StatusOr<Measurement> Remeasure(const Decomposition& d,
                                      const Population& pop,
                                      const DetectionConfig& cfg) {
  absl::StatusOr<std::unique_ptr<ProgramContext>> ctx =
      ProgramContext::Create(d.parent, pop, cfg.measure);
  if (!ctx.ok()) return ctx.status();
  absl::StatusOr<MeasureCache> cache = BuildCache(d, **ctx);
  if (!cache.ok()) return cache.status();
  absl::StatusOr<double> infl;
  if (cfg.estimator == Estimator::kExact) {
    infl = InfluenceExact(d, **ctx, *cache);
  } else {
    infl = InfluenceSampled(d, **ctx, *cache, cfg.sampling);
  }
  if (!infl.ok()) return infl.status();
  return Measurement{cache->association, *infl, cache->reach_prob};
}

}  // namespace

absl::StatusOr<std::vector<ValidatedWitness>> CrossValidatedDetect(
    const Program& p, const Population& pop, const DetectionConfig& det,
    const ValidityConfig& val) {
  absl::Status ok = ValidateConfig(val);
  if (!ok.ok()) return ok;
  absl::StatusOr<std::vector<Fold>> folds =
      Partition(pop.size(), val.folds, val.seed);
  if (!folds.ok()) return folds.status();

  struct Tally {
    int count = 0;
    std::vector<Position> positions;
  };
  std::map<std::string, Tally> tally;
  for (const Fold& fold : *folds) {
    const Population analysis = pop.Select(fold.analysis);
    const Population validation = pop.Select(fold.validation);
    absl::StatusOr<DetectionResult> found = ProxyDetect(p, analysis, det);
    if (!found.ok()) return found.status();
    std::map<std::string, bool> validated;
    for (const Witness& w : found->witnesses) {
      if (validated[w.fingerprint]) continue;
      absl::StatusOr<Measurement> m =
          Remeasure(w.decomposition, validation, det);
      if (!m.ok()) return m.status();
      if (m->association >= det.epsilon && m->influence >= det.delta) {
        validated[w.fingerprint] = true;
        Tally& t = tally[w.fingerprint];
        if (t.count++ == 0) t.positions = w.positions;
      }
    }
  }

  std::vector<ValidatedWitness> out;
  for (const auto& [fingerprint, t] : tally) {
    if (t.count < val.accept_threshold) continue;
    absl::StatusOr<Decomposition> d = MakeDecomposition(p, t.positions);
    if (!d.ok()) return d.status();
    absl::StatusOr<Measurement> m = Remeasure(*d, pop, det);
    if (!m.ok()) return m.status();
    out.push_back(
        {MakeWitness(*d, m->association, m->influence, m->reach_prob),
         t.count});
  }
  std::sort(out.begin(), out.end(),
            [](const ValidatedWitness& a, const ValidatedWitness& b) {
              return WitnessBefore(a.witness, b.witness);
            });
  return out;
}

absl::StatusOr<BootstrapResult> BootstrapPValue(const Program& p1,
                                                const Population& pop,
                                                size_t samples, uint64_t seed,
                                                const MeasureOptions& options) {
  if (samples < 100) {
    return absl::InvalidArgumentError("need at least 100 bootstrap samples");
  }
  absl::StatusOr<std::vector<Value>> x =
      ProgramValues(p1, pop, options.allow_protected);
  if (!x.ok()) return x.status();
  const Codes xc = Encode(BinForAssociation(*x, options.bins));
  Codes zc = Encode(BinForAssociation(pop.protected_values(), options.bins));

  BootstrapResult r;
  r.observed = Association(Tabulate(xc, zc));
  Rng rng = Substream(seed, 0x626f6f74);
  size_t at_least = 0;
  for (size_t i = 0; i < samples; ++i) {
    Shuffle(std::span<uint32_t>(zc.codes), rng);
    at_least += Association(Tabulate(xc, zc)) >= r.observed;
  }
  r.raw_p = static_cast<double>(at_least) / static_cast<double>(samples);
  r.adjusted_p = r.raw_p;
  return r;
}

absl::StatusOr<std::vector<BootstrapResult>> BonferroniAdjust(
    std::span<const BootstrapResult> results, size_t hypothesis_count,
    double alpha_sig) {
  if (hypothesis_count < results.size()) {
    return absl::InvalidArgumentError(
        StrCat("hypothesis count ", hypothesis_count, " below the ",
               results.size(), " results"));
  }
  std::vector<BootstrapResult> out(results.begin(), results.end());
  for (BootstrapResult& r : out) {
    r.hypothesis_count = hypothesis_count;
    r.adjusted_p =
        std::min(1.0, r.raw_p * static_cast<double>(hypothesis_count));
    r.accepted = r.adjusted_p <= alpha_sig;
  }
  return out;
}

}  // namespace proxy_audit
