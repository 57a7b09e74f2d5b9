#include "fairpool/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include <json.hpp>

#include "fairpool/dsl.hpp"
#include "fairpool/error.hpp"

namespace fairpool {

namespace {

std::size_t require_variable(const ProbabilisticCausalModel& model, const std::string& name) {
  auto i = model.index_of(name);
  if (!i) {
    throw Error(ErrorCode::UnknownVariable,
                "'" + name + "' is not a variable of model '" + model.label() + "'");
  }
  return *i;
}

// Runs fn(begin, end) over a partition of [0, n). Each index is computed
// independently, so the partition does not affect the result.
template <class Fn>
void for_chunks(std::size_t n, std::size_t threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, n / 4096));
  if (threads <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(threads);
  const std::size_t per = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(n, t * per);
    const std::size_t end = std::min(n, begin + per);
    pool.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        failures[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

// Slots to hold fixed across samples and the values they hold.
struct Clamp {
  std::vector<char> mask;
  std::vector<std::pair<std::size_t, double>> values;

  explicit Clamp(std::size_t size) : mask(size, 0) {}
  void set(std::size_t i, double v) {
    mask[i] = 1;
    values.emplace_back(i, v);
  }
};

std::vector<double> simulate(const ProbabilisticCausalModel& model, const Clamp& clamp,
                             std::size_t n, std::uint64_t seed, std::size_t threads) {
  if (n == 0) throw Error(ErrorCode::ZeroSamples, "sample count must be positive");
  std::vector<double> samples(n);
  const std::size_t target = model.predictor_index();
  for_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> values(model.size(), 0.0);
    for (std::size_t k = begin; k < end; ++k) {
      model.sample_exogenous(values, seed, k);
      for (const auto& [i, v] : clamp.values) values[i] = v;
      model.propagate(values, clamp.mask);
      samples[k] = values[target];
    }
  });
  return samples;
}

Clamp fair_clamp(const ProbabilisticCausalModel& model, const FairFeatureSet& fair_set,
                 const Assignment& evidence) {
  Clamp clamp(model.size());
  for (const auto& name : fair_set.fair) {
    const std::size_t i = require_variable(model, name);
    const auto& v = model.variables()[i];
    if (v.kind != VariableKind::Endogenous || name == model.predictor()) continue;
    auto it = evidence.find(name);
    if (it == evidence.end()) {
      throw Error(ErrorCode::MissingEvidence, "fair feature '" + name + "' has no evidence");
    }
    clamp.set(i, it->second);
  }
  return clamp;
}

}  // namespace

FairFeatureSet FairFeatureSet::from_names(const std::set<std::string>& fair,
                                          const ProbabilisticCausalModel& model) {
  FairFeatureSet out;
  for (const auto& name : fair) {
    require_variable(model, name);
    if (name != model.predictor()) out.fair.insert(name);
  }
  for (const auto& v : model.variables()) {
    if (v.name != model.predictor() && !out.fair.count(v.name)) out.unfair.insert(v.name);
  }
  return out;
}

FairFeatureSet FairFeatureSet::from_diagram(const CausalDiagram& fair_diagram,
                                            const ProbabilisticCausalModel& model) {
  return from_names(fair_diagram.vertices_with_status(VertexStatus::Retained), model);
}

PredictorDistribution PredictorDistribution::from_samples(std::vector<double> samples,
                                                          std::uint64_t seed) {
  PredictorDistribution d;
  d.n = samples.size();
  d.seed = seed;
  if (d.n > 0) {
    double sum = 0.0;
    for (double x : samples) sum += x;
    d.mean = sum / static_cast<double>(d.n);
    if (d.n > 1) {
      double ss = 0.0;
      for (double x : samples) ss += (x - d.mean) * (x - d.mean);
      d.variance = ss / static_cast<double>(d.n - 1);
    }
    d.standard_error = std::sqrt(d.variance / static_cast<double>(d.n));
  }
  d.samples = std::move(samples);
  return d;
}

double predict_full_evidence(const ProbabilisticCausalModel& model, const Assignment& evidence) {
  Clamp clamp(model.size());
  for (const auto& v : model.variables()) {
    if (v.kind == VariableKind::Endogenous && v.name != model.predictor()) {
      clamp.mask[*model.index_of(v.name)] = 1;
    }
  }
  std::vector<double> values(model.size(), 0.0);
  for (const auto& parent : model.diagram().parents(model.predictor())) {
    auto it = evidence.find(parent);
    if (it == evidence.end()) {
      throw Error(ErrorCode::MissingEvidence,
                  "'" + parent + "' feeds the predictor but has no evidence");
    }
    values[*model.index_of(parent)] = it->second;
  }
  model.propagate(values, clamp.mask);
  return values[model.predictor_index()];
}

PredictorDistribution fair_predict(const ProbabilisticCausalModel& model,
                                   const FairFeatureSet& fair_set, const Assignment& evidence,
                                   std::size_t n, std::uint64_t seed, std::size_t threads) {
  if (n == 0) throw Error(ErrorCode::ZeroSamples, "sample count must be positive");
  const Clamp clamp = fair_clamp(model, fair_set, evidence);
  return PredictorDistribution::from_samples(simulate(model, clamp, n, seed, threads), seed);
}

PredictorDistribution counterfactual_predict(const ProbabilisticCausalModel& model,
                                             const Assignment& evidence,
                                             const std::string& protected_variable, double value,
                                             std::size_t n, std::uint64_t seed,
                                             std::size_t threads) {
  if (n == 0) throw Error(ErrorCode::ZeroSamples, "sample count must be positive");
  const std::size_t p = require_variable(model, protected_variable);
  if (protected_variable == model.predictor()) {
    throw Error(ErrorCode::InvalidArgument, "the predictor cannot be the protected attribute");
  }
  const auto downstream = descendants(model.diagram(), {protected_variable});
  Clamp clamp(model.size());
  clamp.set(p, value);
  for (const auto& [name, v] : evidence) {
    auto i = model.index_of(name);
    if (!i || *i == p || name == model.predictor() || downstream.count(name) ||
        model.variables()[*i].kind != VariableKind::Endogenous) {
      continue;
    }
    clamp.set(*i, v);
  }
  return PredictorDistribution::from_samples(simulate(model, clamp, n, seed, threads), seed);
}

std::map<double, double> exact_fair_distribution(const ProbabilisticCausalModel& model,
                                                 const FairFeatureSet& fair_set,
                                                 const Assignment& evidence,
                                                 std::size_t max_contexts) {
  const Clamp clamp = fair_clamp(model, fair_set, evidence);
  const auto& diagram = model.diagram();

  // Exogenous variables the predictor can still read once Z is clamped.
  std::set<std::string> seen{model.predictor()};
  std::vector<std::string> stack{model.predictor()};
  std::vector<std::size_t> relevant;
  while (!stack.empty()) {
    const std::string v = stack.back();
    stack.pop_back();
    const std::size_t i = *model.index_of(v);
    if (model.variables()[i].kind == VariableKind::Exogenous) {
      relevant.push_back(i);
      continue;
    }
    if (clamp.mask[i]) continue;
    for (const auto& p : diagram.parents(v)) {
      if (seen.insert(p).second) stack.push_back(p);
    }
  }
  std::sort(relevant.begin(), relevant.end());

  std::vector<double> values(model.size(), 0.0);
  for (auto i : model.exogenous_indices()) {
    const auto& dist = *model.variables()[i].distribution;
    if (auto support = dist.finite_support()) {
      values[i] = support->front().first;
    } else if (const auto* po = std::get_if<Poisson>(&dist.family())) {
      values[i] = std::floor(po->lambda);
    } else {
      values[i] = 0.5;
    }
  }
  for (const auto& [i, v] : clamp.values) values[i] = v;

  std::vector<std::vector<std::pair<double, double>>> supports;
  double count = 1.0;
  for (auto i : relevant) {
    auto support = model.variables()[i].distribution->finite_support();
    if (!support) {
      throw Error(ErrorCode::InfiniteSupport,
                  "'" + model.variables()[i].name + "' has " +
                      std::string(model.variables()[i].distribution->family_name()) +
                      " distribution with infinite support");
    }
    count *= static_cast<double>(support->size());
    supports.push_back(std::move(*support));
  }
  if (count > static_cast<double>(max_contexts)) {
    throw Error(ErrorCode::InvalidArgument, "enumeration needs " + format_number(count) +
                                                " contexts, above the limit of " +
                                                std::to_string(max_contexts));
  }

  std::map<double, double> pmf;
  std::vector<std::size_t> digit(relevant.size(), 0);
  for (;;) {
    double prob = 1.0;
    for (std::size_t j = 0; j < relevant.size(); ++j) {
      values[relevant[j]] = supports[j][digit[j]].first;
      prob *= supports[j][digit[j]].second;
    }
    model.propagate(values, clamp.mask);
    pmf[values[model.predictor_index()]] += prob;

    std::size_t j = 0;
    while (j < digit.size() && ++digit[j] == supports[j].size()) digit[j++] = 0;
    if (j == digit.size()) break;
  }
  return pmf;
}

std::map<double, double> empirical_pmf(const std::vector<double>& samples) {
  std::map<double, double> pmf;
  if (samples.empty()) return pmf;
  const double w = 1.0 / static_cast<double>(samples.size());
  for (double x : samples) pmf[x] += w;
  return pmf;
}

double total_variation(const std::map<double, double>& p, const std::map<double, double>& q) {
  double l1 = 0.0;
  auto a = p.begin();
  auto b = q.begin();
  while (a != p.end() || b != q.end()) {
    if (b == q.end() || (a != p.end() && a->first < b->first)) {
      l1 += std::abs(a->second);
      ++a;
    } else if (a == p.end() || b->first < a->first) {
      l1 += std::abs(b->second);
      ++b;
    } else {
      l1 += std::abs(a->second - b->second);
      ++a;
      ++b;
    }
  }
  return 0.5 * l1;
}

std::string_view to_string(Verdict verdict) noexcept {
  return verdict == Verdict::FairWithinTolerance ? "fair_within_tolerance" : "violation";
}

Verdict judge(double gap, double standard_error, double abs_tol) {
  return gap <= std::max(abs_tol, kCriticalZ * standard_error) ? Verdict::FairWithinTolerance
                                                                : Verdict::Violation;
}

namespace {

ScorePair compare(const PredictorDistribution& a, const PredictorDistribution& b,
                  double abs_tol) {
  ScorePair s;
  s.value_a = a.mean;
  s.value_a_prime = b.mean;
  s.gap = std::abs(a.mean - b.mean);
  s.standard_error = std::hypot(a.standard_error, b.standard_error);
  s.verdict = judge(s.gap, s.standard_error, abs_tol);
  return s;
}

}  // namespace

FairnessReport check_counterfactual_fairness(const ProbabilisticCausalModel& model,
                                             const FairFeatureSet& fair_set,
                                             const Assignment& evidence,
                                             const std::string& protected_variable, double a,
                                             double a_prime, std::size_t n, std::uint64_t seed,
                                             double abs_tol, std::size_t threads) {
  require_variable(model, protected_variable);
  Assignment with_a = evidence;
  Assignment with_a_prime = evidence;
  with_a[protected_variable] = a;
  with_a_prime[protected_variable] = a_prime;

  FairnessReport r;
  r.model = model.label();
  r.protected_variable = protected_variable;
  r.a = a;
  r.a_prime = a_prime;
  r.n = n;
  r.seed = seed;
  r.abs_tol = abs_tol;
  r.fair = compare(fair_predict(model, fair_set, with_a, n, seed, threads),
                   fair_predict(model, fair_set, with_a_prime, n, seed, threads), abs_tol);
  r.unfair = compare(
      counterfactual_predict(model, evidence, protected_variable, a, n, seed, threads),
      counterfactual_predict(model, evidence, protected_variable, a_prime, n, seed, threads),
      abs_tol);
  try {
    r.full_evidence.emplace(predict_full_evidence(model, with_a),
                            predict_full_evidence(model, with_a_prime));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingEvidence) throw;
  }
  return r;
}

std::string to_json(const FairnessReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["protected"] = r.protected_variable;
  j["a"] = r.a;
  j["a_prime"] = r.a_prime;
  j["fair_gap"] = r.fair.gap;
  j["unfair_gap"] = r.unfair.gap;
  j["std_err"] = r.fair.standard_error;
  j["verdict"] = to_string(r.fair.verdict);
  j["unfair_verdict"] = to_string(r.unfair.verdict);
  j["fair"] = {{"value_a", r.fair.value_a},
               {"value_a_prime", r.fair.value_a_prime},
               {"std_err", r.fair.standard_error}};
  j["unfair"] = {{"method", "counterfactual"},
                 {"value_a", r.unfair.value_a},
                 {"value_a_prime", r.unfair.value_a_prime},
                 {"std_err", r.unfair.standard_error}};
  if (r.full_evidence) {
    j["full_evidence"] = {{"value_a", r.full_evidence->first},
                          {"value_a_prime", r.full_evidence->second},
                          {"gap", std::abs(r.full_evidence->first - r.full_evidence->second)}};
  } else {
    j["full_evidence"] = nullptr;
  }
  j["abs_tol"] = r.abs_tol;
  j["n"] = r.n;
  j["seed"] = r.seed;
  return j.dump(2) + "\n";
}

std::string samples_csv(const PredictorDistribution& dist,
                        const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::string out;
  for (const auto& [key, value] : metadata) out += "# " + key + "=" + value + "\n";
  out += "index,y\n";
  for (std::size_t k = 0; k < dist.samples.size(); ++k) {
    out += std::to_string(k);
    out += ',';
    out += format_number(dist.samples[k]);
    out += '\n';
  }
  return out;
}

}  // namespace fairpool
