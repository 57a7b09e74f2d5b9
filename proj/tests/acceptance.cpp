// One PASS/FAIL line per acceptance criterion, each with its wall time.
// Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fairpool/aggregation.hpp"
#include "fairpool/density.hpp"
#include "fairpool/dsl.hpp"
#include "fairpool/model.hpp"
#include "fairpool/monte_carlo.hpp"
#include "fairpool/pooling.hpp"
#include "support/testkit.hpp"

using namespace fairpool;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> check;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

std::vector<CausalDiagram> corpus_diagrams() {
  std::vector<CausalDiagram> out;
  for (const auto& m : testkit::corpus_models()) out.push_back(m.diagram());
  return out;
}

CausalDiagram corpus_fair_diagram() {
  return pooling_removal(corpus_diagrams(), testkit::corpus_spec(), {}).diagram;
}

Outcome pooled_diagram_reproduction() {
  const auto pooled = corpus_fair_diagram();
  const auto golden =
      read_dag(testkit::read_text(testkit::golden_path("pooling_removal.dag")));
  const bool same = pooled == golden && pooled.edges().size() == 7;
  return {same, std::to_string(pooled.edges().size()) + " edges, " +
                    (same ? "identical to the committed pooled diagram" : "differs from golden")};
}

Outcome removal_pooling_trace() {
  AggregationConfig config;
  config.order = AlgorithmOrder::RemovalPooling;
  const auto pooled = removal_pooling(corpus_diagrams(), testkit::corpus_spec(), config).diagram;
  const auto golden = read_dag(testkit::read_text(testkit::golden_path("removal_pooling.dag")));
  std::vector<Edge> into_y;
  for (const auto& e : pooled.edges()) {
    if (e.to == pooled.predictor()) into_y.push_back(e);
  }
  const bool pass = pooled == golden && into_y.size() == 1 && into_y[0].from == "Cvr";
  return {pass, "predictor-incident edges: " + std::to_string(into_y.size()) +
                    (into_y.size() == 1 ? " (" + into_y[0].from + " -> Y)" : "") +
                    (pooled == golden ? ", matches hand trace" : ", differs from hand trace")};
}

Outcome fair_scores_ignore_gender() {
  const auto models = testkit::corpus_models();
  const auto records = testkit::corpus_evidence();
  const auto fair = corpus_fair_diagram();
  constexpr std::size_t n = 100000;
  bool pass = true;
  std::string detail;
  for (const auto& m : models) {
    const auto fs = FairFeatureSet::from_diagram(fair, m);
    const auto a1 = fair_predict(m, fs, records[0].values, n, 1);
    const auto a2 = fair_predict(m, fs, records[1].values, n, 1);
    const bool identical = a1.samples == a2.samples;
    double worst = 0.0;
    for (std::uint64_t s : {2u, 3u, 4u}) {
      const auto b1 = fair_predict(m, fs, records[0].values, n, s);
      const auto b2 = fair_predict(m, fs, records[1].values, n, s + 100);
      worst = std::max(worst, std::abs(b1.mean - b2.mean));
    }
    pass = pass && identical && worst <= kDefaultAbsTol;
    detail += m.label() + ": paired " + (identical ? "bit-identical" : "DIFFER") +
              ", max independent-seed gap " + fmt(worst, 3) + "; ";
  }
  return {pass, detail + "tolerance " + fmt(kDefaultAbsTol)};
}

// Gnd is not a parent of Y in either transcribed model, so clamping Y's
// parents to the evidence leaves nothing for gender to change. The literal
// check is reported as it is; the counterfactual baseline (gender set by
// intervention, its descendants recomputed) is printed for reference only
// and does not decide the verdict.
Outcome raw_models_unfair() {
  const auto models = testkit::corpus_models();
  const auto records = testkit::corpus_evidence();
  const double threshold = 10.0 * kDefaultAbsTol;
  bool pass = true;
  std::string detail;
  for (const auto& m : models) {
    const double s1 = predict_full_evidence(m, records[0].values);
    const double s2 = predict_full_evidence(m, records[1].values);
    const double gap = std::abs(s1 - s2);
    pass = pass && gap > threshold;
    const auto c1 = counterfactual_predict(m, records[0].values, "Gnd", 1, 5000, 1);
    const auto c0 = counterfactual_predict(m, records[0].values, "Gnd", 0, 5000, 1);
    detail += m.label() + ": full-evidence " + fmt(s1) + " vs " + fmt(s2) + " (gap " + fmt(gap) +
              "), counterfactual gap " + fmt(std::abs(c1.mean - c0.mean)) + "; ";
  }
  return {pass, detail + "need > " + fmt(threshold) +
                    ". Gnd is not a parent of Y, so full-evidence scores cannot differ"};
}

Outcome oracle_equivalence() {
  testkit::Rng rng(5150);
  std::size_t compared = 0;
  double worst = 0.0;
  while (compared < 6) {
    testkit::ModelOptions opt;
    opt.discrete_only = true;
    opt.exogenous = 1 + rng() % 3;
    opt.endogenous = rng() % (6 - opt.exogenous);
    opt.max_depth = 2;
    const auto m = testkit::random_model(rng, opt);
    if (m.size() > 6) continue;
    std::set<std::string> fair;
    Assignment evidence;
    for (const auto& v : m.variables()) {
      if (v.kind == VariableKind::Endogenous && v.name != m.predictor() && rng() % 2) {
        fair.insert(v.name);
        evidence[v.name] = static_cast<double>(rng() % 3);
      }
    }
    const auto fs = FairFeatureSet::from_names(fair, m);
    const auto exact = exact_fair_distribution(m, fs, evidence);
    const auto mc = fair_predict(m, fs, evidence, 100000, 77 + compared);
    worst = std::max(worst, total_variation(empirical_pmf(mc.samples), exact));
    ++compared;
  }
  return {worst < 0.01, std::to_string(compared) + " models, worst total variation " + fmt(worst, 3)};
}

// The published score for this case is 3.022. That value cannot be reproduced from
// the printed equations and distributions; under the shipped encoding table
// the analytic expectation is E[Job] + Dpt + Mrk + Cvr = 0.78 + 0 + 0.8 + 0.4.
Outcome derived_expectation() {
  const auto models = testkit::corpus_models();
  const auto records = testkit::corpus_evidence();
  const auto fs = FairFeatureSet::from_diagram(corpus_fair_diagram(), models[0]);
  const auto d = fair_predict(models[0], fs, records[0].values, 100000, 1);
  const double z = std::abs(d.mean - 1.98) / d.standard_error;
  return {z <= kCriticalZ, "alice mean " + fmt(d.mean, 6) + ", SE " + fmt(d.standard_error, 3) +
                               ", |z| " + fmt(z, 3) + " (published 3.022 not reproducible)"};
}

Outcome property_sweeps() {
  std::size_t violations = 0;
  std::size_t checks = 0;
  auto expect = [&](bool ok) {
    ++checks;
    if (!ok) ++violations;
  };
  testkit::Rng rng(90210);

  for (int trial = 0; trial < 1000; ++trial) {
    const auto ensemble = testkit::random_ensemble(rng, 1 + rng() % 5, 2 + rng() % 5,
                                                   0.2 + 0.6 * (rng() % 100) / 100.0);
    const auto spec = testkit::random_spec(rng, ensemble[0]);
    for (auto rule : {AggregationRule::StrictMajority, AggregationRule::Intersection,
                      AggregationRule::Union}) {
      expect(testkit::is_acyclic(pooling(ensemble, rule, TieBreak::lexicographic())));
      for (auto order : {AlgorithmOrder::RemovalPooling, AlgorithmOrder::PoolingRemoval}) {
        const auto fair = aggregate(ensemble, spec, {rule, order, TieBreak::lexicographic(), true}).diagram;
        expect(testkit::is_acyclic(fair));
        expect(satisfies_nondescendant_condition(fair, spec));
      }
    }
  }

  for (int trial = 0; trial < 200; ++trial) {
    testkit::ModelOptions opt;
    opt.exogenous = 1 + rng() % 3;
    opt.endogenous = 1 + rng() % 4;
    const auto m = testkit::random_model(rng, opt);
    const auto ctx = sample_context(m, rng(), 0);
    Assignment factual;
    try {
      factual = evaluate(m, ctx);
    } catch (const Error&) {
      continue;
    }
    for (const auto& [x, value] : factual) {
      if (x == m.predictor()) continue;
      expect(counterfactual(m, ctx, {{x, value}}, m.predictor()) == factual.at(m.predictor()));
    }
  }

  const auto models = testkit::corpus_models();
  const auto records = testkit::corpus_evidence();
  const auto fair = corpus_fair_diagram();
  for (const auto& m : models) {
    const auto fs = FairFeatureSet::from_diagram(fair, m);
    const auto base = fair_predict(m, fs, records[0].values, 5000, 42, 1);
    expect(fair_predict(m, fs, records[0].values, 5000, 42, 4).samples == base.samples);
    expect(fair_predict(m, fs, records[0].values, 5000, 42, 1).samples == base.samples);
    const auto head = fair_predict(m, fs, records[0].values, 1000, 42, 1);
    expect(std::equal(head.samples.begin(), head.samples.end(), base.samples.begin()));
  }

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> xs(2 + rng() % 500);
    for (auto& x : xs) x = std::uniform_real_distribution<double>(-10, 10)(rng);
    expect(std::abs(trapezoid(kde(xs)) - 1.0) < 1e-9);

    const auto d = PredictorDistribution::from_samples(xs, 1);
    const auto e = PredictorDistribution::from_samples(
        std::vector<double>(xs.rbegin(), xs.rend()), 2);
    const std::vector<PredictorDistribution> same(3, d);
    const std::vector<PredictorDistribution> pair{d, e};
    for (auto kind : {PoolingKind::ArithmeticMixture, PoolingKind::GeometricPool}) {
      expect(std::abs(pool_samples({kind, {}}, same).mean - d.mean) < 1e-9);
      expect(std::abs(pool_samples({kind, {1.0, 0.0}}, pair).mean - d.mean) < 1e-9);
    }
  }
  return {violations == 0,
          std::to_string(checks) + " checks, " + std::to_string(violations) + " violations"};
}

Outcome dsl_round_trip() {
  std::size_t failures = 0;
  for (const auto& m : testkit::corpus_models()) {
    if (!(parse_model(serialize_model(m)) == m)) ++failures;
  }
  testkit::Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    testkit::ModelOptions opt;
    opt.exogenous = 1 + rng() % 4;
    opt.endogenous = rng() % 5;
    opt.allow_division = true;
    const auto m = testkit::random_model(rng, opt);
    if (!(parse_model(serialize_model(m)) == m)) ++failures;
  }
  std::size_t escapes = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string s(rng() % 64, '\0');
    for (auto& c : s) c = static_cast<char>(rng() & 0xff);
    try {
      parse_model(s);
    } catch (const Error&) {
    } catch (...) {
      ++escapes;
    }
  }
  return {failures == 0 && escapes == 0, std::to_string(failures) +
                                             " round-trip failures over 1002 models, " +
                                             std::to_string(escapes) + " fuzz escapes in 1e5 inputs"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "pooled fair diagram (pooling then removal)", 1, pooled_diagram_reproduction},
      {2, "removal then pooling hand trace", 1, removal_pooling_trace},
      {3, "fair scores ignore gender", 30, fair_scores_ignore_gender},
      {4, "raw-model full-evidence scores differ", 1, raw_models_unfair},
      {5, "Monte Carlo matches exact enumeration", 60, oracle_equivalence},
      {6, "Alice's fair mean is 1.98", 30, derived_expectation},
      {7, "property sweeps", 300, property_sweeps},
      {8, "DSL round trip and fuzz", 120, dsl_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.budget_seconds;
    const bool pass = outcome.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s criterion %d: %s [%.2fs / %.0fs%s] %s\n", pass ? "PASS" : "FAIL", c.id,
                c.title.c_str(), seconds, c.budget_seconds, in_time ? "" : " OVER BUDGET",
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
