#include <doctest.h>

#include <cmath>

#include "fairpool/aggregation.hpp"
#include "fairpool/monte_carlo.hpp"
#include "support/testkit.hpp"

using namespace fairpool;

namespace {

struct Corpus {
  std::vector<ProbabilisticCausalModel> models = testkit::corpus_models();
  std::vector<EvidenceRecord> records = testkit::corpus_evidence();
  CausalDiagram fair = [this] {
    std::vector<CausalDiagram> d;
    for (const auto& m : models) d.push_back(m.diagram());
    return pooling_removal(d, testkit::corpus_spec(), {}).diagram;
  }();
  const ProbabilisticCausalModel& alice() const { return models[0]; }
  const ProbabilisticCausalModel& bob() const { return models[1]; }
  const Assignment& app1() const { return records[0].values; }
  const Assignment& app2() const { return records[1].values; }
};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

ProbabilisticCausalModel model_of(const std::string& text) { return parse_model(text); }

}  // namespace

TEST_CASE("predict_full_evidence") {
  const Corpus c;
  CHECK(predict_full_evidence(c.alice(), c.app1()) == doctest::Approx(2.2).epsilon(1e-12));
  CHECK(predict_full_evidence(c.alice(), c.app1()) == predict_full_evidence(c.alice(), c.app2()));
  const auto constant = model_of("model \"k\" { endogenous V = 2 predictor Y = 3.5 }");
  CHECK(predict_full_evidence(constant, {{"V", 9}}) == 3.5);
  auto missing = c.app1();
  missing.erase("Mrk");
  CHECK(code_of([&] { predict_full_evidence(c.alice(), missing); }) == ErrorCode::MissingEvidence);
}

TEST_CASE("fair_predict on the corpus") {
  const Corpus c;
  const auto fs = FairFeatureSet::from_diagram(c.fair, c.alice());
  CHECK(fs.fair == std::set<std::string>{"Cvr", "Dpt", "Mrk", "U_cvr", "U_dpt", "U_mrk"});
  CHECK(fs.unfair.count("Gnd"));
  CHECK(fs.fair.size() + fs.unfair.size() + 1 == c.alice().size());

  const auto d1 = fair_predict(c.alice(), fs, c.app1(), 100000, 2024);
  // E[Job] + Dpt + Mrk + Cvr = (0.3 + 0.25 + 0.23) + 0 + 0.8 + 0.4.
  CHECK(std::abs(d1.mean - 1.98) <= 3.0 * d1.standard_error);
  const auto d2 = fair_predict(c.alice(), fs, c.app2(), 100000, 2024);
  CHECK(d1.samples == d2.samples);

  auto parents = FairFeatureSet::from_names({"Job", "Dpt", "Mrk", "Cvr"}, c.alice());
  const auto single = fair_predict(c.alice(), parents, c.app1(), 1, 5);
  CHECK(single.samples == std::vector<double>{predict_full_evidence(c.alice(), c.app1())});

  CHECK(code_of([&] { fair_predict(c.alice(), fs, c.app1(), 0, 1); }) == ErrorCode::ZeroSamples);
  auto missing = c.app1();
  missing.erase("Cvr");
  CHECK(code_of([&] { fair_predict(c.alice(), fs, missing, 10, 1); }) ==
        ErrorCode::MissingEvidence);
}

TEST_CASE("exact_fair_distribution") {
  const auto one = model_of(
      "model \"b\" { exogenous U ~ Bernoulli(p=0.3) predictor Y = U }");
  const auto pmf = exact_fair_distribution(one, FairFeatureSet::from_names({}, one), {});
  CHECK(pmf.size() == 2);
  CHECK(pmf.at(0.0) == doctest::Approx(0.7));
  CHECK(pmf.at(1.0) == doctest::Approx(0.3));

  const auto two = model_of(
      "model \"bb\" { exogenous U1 ~ Bernoulli(p=0.5) exogenous U2 ~ Bernoulli(p=0.5) "
      "predictor Y = U1 + U2 }");
  const auto pmf2 = exact_fair_distribution(two, FairFeatureSet::from_names({}, two), {});
  CHECK(pmf2 == std::map<double, double>{{0.0, 0.25}, {1.0, 0.5}, {2.0, 0.25}});

  const auto poisson = model_of(
      "model \"p\" { exogenous U ~ Poisson(lambda=2) predictor Y = U }");
  CHECK(code_of([&] {
          exact_fair_distribution(poisson, FairFeatureSet::from_names({}, poisson), {});
        }) == ErrorCode::InfiniteSupport);

  // A clamped fair feature shields the predictor from the Poisson.
  const auto shielded = model_of(
      "model \"s\" { exogenous U ~ Poisson(lambda=2) exogenous B ~ Bernoulli(p=0.5) "
      "endogenous V = U predictor Y = V + B }");
  const auto pmf3 =
      exact_fair_distribution(shielded, FairFeatureSet::from_names({"V"}, shielded), {{"V", 3}});
  CHECK(pmf3 == std::map<double, double>{{3.0, 0.5}, {4.0, 0.5}});
}

TEST_CASE("check_counterfactual_fairness") {
  const Corpus c;
  for (const auto& m : c.models) {
    const auto fs = FairFeatureSet::from_diagram(c.fair, m);
    const auto r = check_counterfactual_fairness(m, fs, c.app1(), "Gnd", 1, 0, 20000, 3);
    CHECK(r.fair.gap == 0.0);
    CHECK(r.fair.verdict == Verdict::FairWithinTolerance);
    CHECK(r.unfair.gap > 0.45);
    CHECK(r.unfair.verdict == Verdict::Violation);
    REQUIRE(r.full_evidence);
    CHECK(r.full_evidence->first == r.full_evidence->second);

    const auto same = check_counterfactual_fairness(m, fs, c.app1(), "Gnd", 1, 1, 2000, 3);
    CHECK(same.fair.gap == 0.0);
    CHECK(same.unfair.gap == 0.0);
    CHECK(same.unfair.verdict == Verdict::FairWithinTolerance);

    const auto json = to_json(r);
    for (const char* key : {"\"model\"", "\"protected\"", "\"a\"", "\"a_prime\"", "\"fair_gap\"",
                            "\"unfair_gap\"", "\"std_err\"", "\"verdict\""}) {
      CHECK(json.find(key) != std::string::npos);
    }
  }
  // Bob's only route from Gnd to Y adds exactly 0.5 through Job.
  const auto bob = check_counterfactual_fairness(
      c.bob(), FairFeatureSet::from_diagram(c.fair, c.bob()), c.app1(), "Gnd", 1, 0, 5000, 8);
  CHECK(bob.unfair.gap == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(judge(0.01, 0.0, 0.02) == Verdict::FairWithinTolerance);
  CHECK(judge(0.05, 0.02, 0.02) == Verdict::FairWithinTolerance);
  CHECK(judge(0.05, 0.01, 0.02) == Verdict::Violation);
  CHECK(judge(0.05, 0.001, 0.02) == Verdict::Violation);
}

TEST_CASE("property: evidence independence, chunking and threads") {
  const Corpus c;
  testkit::Rng rng(31337);
  for (const auto& m : c.models) {
    const auto fs = FairFeatureSet::from_diagram(c.fair, m);
    const auto base = fair_predict(m, fs, c.app1(), 4000, 99, 1);
    for (int trial = 0; trial < 20; ++trial) {
      auto perturbed = c.app1();
      for (const auto& name : fs.unfair) {
        if (perturbed.count(name)) perturbed[name] = static_cast<double>(rng() % 7) - 3.0;
      }
      CHECK(fair_predict(m, fs, perturbed, 4000, 99, 1).samples == base.samples);
    }
    const auto half = fair_predict(m, fs, c.app1(), 2000, 99, 1);
    CHECK(std::equal(half.samples.begin(), half.samples.end(), base.samples.begin()));
    CHECK(fair_predict(m, fs, c.app1(), 4000, 99, 3).samples == base.samples);
    CHECK(fair_predict(m, fs, c.app1(), 4000, 99, 0).samples == base.samples);
  }
}

TEST_CASE("property: summary statistics agree with the raw samples") {
  testkit::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(1 + rng() % 5000);
    for (auto& x : xs) x = std::uniform_real_distribution<double>(-50, 50)(rng);
    const auto d = PredictorDistribution::from_samples(xs, 1);
    long double sum = 0, ss = 0;
    for (double x : xs) sum += x;
    const long double mean = sum / xs.size();
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double tol = 1e-9 * static_cast<double>(xs.size());
    CHECK(d.n == xs.size());
    CHECK(std::abs(d.mean - static_cast<double>(mean)) <= tol);
    if (xs.size() > 1) {
      CHECK(std::abs(d.variance - static_cast<double>(ss / (xs.size() - 1))) <= tol);
    }
    CHECK(d.standard_error == doctest::Approx(std::sqrt(d.variance / d.n)));
  }
}

TEST_CASE("property: Monte Carlo agrees with exact enumeration") {
  testkit::Rng rng(8080);
  int compared = 0;
  for (int trial = 0; trial < 12; ++trial) {
    testkit::ModelOptions opt;
    opt.discrete_only = true;
    opt.exogenous = 1 + rng() % 3;
    opt.endogenous = 1 + rng() % 2;
    opt.max_depth = 2;
    const auto m = testkit::random_model(rng, opt);
    std::set<std::string> fair;
    Assignment evidence;
    for (const auto& v : m.variables()) {
      if (v.kind == VariableKind::Endogenous && v.name != "Y" && rng() % 2) {
        fair.insert(v.name);
        evidence[v.name] = static_cast<double>(rng() % 3);
      }
    }
    const auto fs = FairFeatureSet::from_names(fair, m);
    const auto exact = exact_fair_distribution(m, fs, evidence);
    double total = 0.0;
    for (const auto& [y, p] : exact) total += p;
    CHECK(std::abs(total - 1.0) < 1e-12);
    const auto mc = fair_predict(m, fs, evidence, 100000, 1234 + trial);
    CHECK(total_variation(empirical_pmf(mc.samples), exact) < 0.01);
    ++compared;
  }
  CHECK(compared == 12);
}

TEST_CASE("samples CSV") {
  const auto d = PredictorDistribution::from_samples({0.5, 1.25}, 7);
  CHECK(samples_csv(d, {{"seed", "7"}}) == "# seed=7\nindex,y\n0,0.5\n1,1.25\n");
}
