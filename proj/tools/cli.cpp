#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairpool/aggregation.hpp"
#include "fairpool/dsl.hpp"
#include "fairpool/monte_carlo.hpp"
#include "fairpool/pooling.hpp"

namespace fairpool::cli {

namespace {

namespace fs = std::filesystem;
using Metadata = std::vector<std::pair<std::string, std::string>>;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::vector<std::string> files;
  std::vector<std::string> models;
  std::string spec;
  std::string encoding;
  std::string evidence;
  std::string dag;
  std::string out;
  std::string rule = "strict-majority";
  std::string order = "pooling-removal";
  std::string tie_break = "lexicographic";
  bool no_prune = false;
  std::size_t samples = kDefaultSamples;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string mode = "fair";
  std::string pool = "mean";
  std::vector<double> weights;
  std::string protected_variable;
  std::vector<std::string> values;
  double tolerance = kDefaultAbsTol;
  std::string candidate;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
}

std::optional<fs::path> output_dir(const Options& o) {
  if (o.out.empty()) return std::nullopt;
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + o.out + "': " + ec.message());
  return fs::path(o.out);
}

Error located(const Error& e, const std::string& path) {
  return Error(e.code(), path + ": " + e.detail(), e.where());
}

std::vector<ProbabilisticCausalModel> load_models(const Options& o) {
  if (o.models.empty()) throw UsageError("--models is required");
  std::vector<ProbabilisticCausalModel> models;
  for (const auto& path : o.models) {
    const auto text = read_file(path);
    try {
      models.push_back(parse_model(text));
    } catch (const Error& e) {
      throw located(e, path);
    }
  }
  return models;
}

FairnessSpec load_spec(const Options& o, std::span<const ProbabilisticCausalModel> models) {
  if (o.spec.empty()) throw UsageError("--spec is required");
  const auto text = read_file(o.spec);
  try {
    return parse_fairness_spec(text, models);
  } catch (const Error& e) {
    throw located(e, o.spec);
  }
}

EncodingTable load_encoding(const Options& o) {
  if (o.encoding.empty()) return {};
  const auto text = read_file(o.encoding);
  try {
    return parse_encoding(text);
  } catch (const Error& e) {
    throw located(e, o.encoding);
  }
}

std::vector<EvidenceRecord> load_evidence(const Options& o, const EncodingTable& encoding,
                                          std::span<const ProbabilisticCausalModel> models) {
  if (o.evidence.empty()) throw UsageError("--evidence is required");
  const auto text = read_file(o.evidence);
  std::vector<EvidenceRecord> records;
  try {
    records = parse_evidence(text, encoding, models);
  } catch (const Error& e) {
    throw located(e, o.evidence);
  }
  if (!o.candidate.empty()) {
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const EvidenceRecord& r) { return r.label == o.candidate; });
    if (it == records.end()) throw UsageError("no candidate '" + o.candidate + "' in evidence");
    records = {*it};
  }
  if (records.empty()) throw UsageError("evidence file has no records");
  return records;
}

AggregationConfig config_of(const Options& o) {
  AggregationConfig c;
  c.rule = parse_rule(o.rule);
  c.order = parse_order(o.order);
  c.tie_break = parse_tie_break(o.tie_break);
  c.prune_isolated = !o.no_prune;
  return c;
}

Metadata metadata_of(const Options& o, std::span<const ProbabilisticCausalModel> models) {
  std::string labels;
  for (const auto& m : models) labels += (labels.empty() ? "" : ",") + m.label();
  return {{"seed", std::to_string(o.seed)},   {"n", std::to_string(o.samples)},
          {"rule", o.rule},                   {"order", o.order},
          {"tie-break", o.tie_break},         {"prune", o.no_prune ? "off" : "on"},
          {"models", labels}};
}

void validate_usage(const Options& o) {
  if (o.samples == 0) throw UsageError("--samples must be positive");
  if (o.mode != "fair" && o.mode != "unfair") throw UsageError("--mode must be fair or unfair");
  try {
    config_of(o);
    parse_pooling_kind(o.pool);
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
}

std::string join(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : " ") + n;
  return out.empty() ? "-" : out;
}

CausalDiagram fair_diagram(const Options& o, std::span<const ProbabilisticCausalModel> models,
                           const FairnessSpec& spec) {
  if (!o.dag.empty()) {
    const auto text = read_file(o.dag);
    try {
      return read_dag(text);
    } catch (const Error& e) {
      throw located(e, o.dag);
    }
  }
  std::vector<CausalDiagram> diagrams;
  for (const auto& m : models) diagrams.push_back(m.diagram());
  return aggregate(diagrams, spec, config_of(o)).diagram;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.files.empty()) throw UsageError("validate needs at least one file");
  enum class Status { Ok, Domain, Io };
  std::vector<std::pair<Status, std::string>> results(o.files.size(), {Status::Ok, "OK"});
  std::vector<ProbabilisticCausalModel> models;
  EncodingTable encoding;

  auto check = [&](std::size_t i, auto&& fn) {
    try {
      fn(read_file(o.files[i]));
    } catch (const Error& e) {
      results[i] = {e.code() == ErrorCode::IoError ? Status::Io : Status::Domain, e.what()};
    }
  };
  auto extension = [&](std::size_t i) { return fs::path(o.files[i]).extension().string(); };

  // Models and encodings first so specs and evidence can be checked
  // against them.
  for (std::size_t i = 0; i < o.files.size(); ++i) {
    const auto ext = extension(i);
    if (ext == ".scm") {
      check(i, [&](const std::string& t) { models.push_back(parse_model(t)); });
    } else if (ext == ".enc") {
      check(i, [&](const std::string& t) {
        const auto table = parse_encoding(t);
        for (const auto& [var, tokens] : table.entries()) {
          for (const auto& [token, value] : tokens) encoding.add(var, token, value);
        }
      });
    }
  }
  for (std::size_t i = 0; i < o.files.size(); ++i) {
    const auto ext = extension(i);
    if (ext == ".fair") {
      check(i, [&](const std::string& t) { parse_fairness_spec(t, models); });
    } else if (ext == ".evd") {
      check(i, [&](const std::string& t) { parse_evidence(t, encoding, models); });
    } else if (ext == ".dag") {
      check(i, [&](const std::string& t) { read_dag(t); });
    } else if (ext != ".scm" && ext != ".enc") {
      results[i] = {Status::Io, "unknown file type '" + ext + "'"};
    }
  }

  Status worst = Status::Ok;
  for (std::size_t i = 0; i < o.files.size(); ++i) {
    out << o.files[i] << ": " << results[i].second << '\n';
    worst = std::max(worst, results[i].first);
  }
  for (const auto& w : model_set_warnings(models)) err << "warning: " << w << '\n';
  return worst == Status::Ok ? kExitOk : worst == Status::Domain ? kExitDomain : kExitUsage;
}

// ---------------------------------------------------------------- aggregate

int cmd_aggregate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto models = load_models(o);
  const auto spec = load_spec(o, models);
  for (const auto& w : model_set_warnings(models)) err << "warning: " << w << '\n';
  std::vector<CausalDiagram> diagrams;
  for (const auto& m : models) diagrams.push_back(m.diagram());
  const auto result = aggregate(diagrams, spec, config_of(o));
  const auto& d = result.diagram;

  const auto dag = write_dag(d, metadata_of(o, models));
  out << "rule=" << o.rule << " order=" << o.order << " tie-break=" << o.tie_break
      << " prune=" << (o.no_prune ? "off" : "on") << '\n';
  out << "retained: " << join(d.vertices_with_status(VertexStatus::Retained)) << '\n';
  out << "removed: " << join(d.vertices_with_status(VertexStatus::Removed)) << '\n';
  out << "pruned: " << join(d.vertices_with_status(VertexStatus::Pruned)) << '\n';
  out << "edges (" << d.edges().size() << "):\n";
  for (const auto& e : d.edges()) out << "  " << e.from << " -> " << e.to << '\n';
  out << "pooling decisions:\n";
  for (const auto& dec : result.decisions) {
    out << "  depth " << dec.depth << " #" << dec.rank + 1 << "/" << dec.layer_size << "  "
        << dec.edge.from << " -> " << dec.edge.to << "  votes " << dec.votes_for << "/"
        << dec.voters << "  "
        << (dec.inserted ? "inserted" : dec.accepted ? "skipped (cycle)" : "rejected") << '\n';
  }
  if (auto dir = output_dir(o)) {
    write_file(*dir / "fair.dag", dag);
    out << "wrote " << (*dir / "fair.dag").string() << '\n';
  } else {
    out << "---\n" << dag;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- predict

std::string protected_of(const Options& o, const FairnessSpec& spec,
                         const std::vector<EvidenceRecord>& records) {
  if (!o.protected_variable.empty()) return o.protected_variable;
  std::vector<std::string> seen;
  for (const auto& a : spec.protected_attributes) {
    for (const auto& r : records) {
      if (r.values.count(a)) {
        seen.push_back(a);
        break;
      }
    }
  }
  if (seen.size() != 1) throw UsageError("cannot infer the protected attribute; pass --protected");
  return seen.front();
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream& err) {
  const auto models = load_models(o);
  const auto spec = load_spec(o, models);
  const auto encoding = load_encoding(o);
  const auto records = load_evidence(o, encoding, models);
  for (const auto& w : model_set_warnings(models)) err << "warning: " << w << '\n';
  const bool fair = o.mode == "fair";

  std::vector<FairFeatureSet> fair_sets;
  std::string protected_variable;
  if (fair) {
    const auto diagram = fair_diagram(o, models, spec);
    for (const auto& m : models) fair_sets.push_back(FairFeatureSet::from_diagram(diagram, m));
  } else {
    protected_variable = protected_of(o, spec, records);
  }

  PoolingOperator op;
  op.kind = parse_pooling_kind(o.pool);
  op.weights = o.weights;
  auto meta = metadata_of(o, models);
  meta.emplace_back("mode", o.mode);
  meta.emplace_back("pool", o.pool);
  const auto dir = output_dir(o);

  std::vector<std::string> labels;
  for (const auto& m : models) labels.push_back(m.label());

  for (const auto& record : records) {
    std::vector<PredictorDistribution> dists;
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto& m = models[i];
      if (fair) {
        dists.push_back(fair_predict(m, fair_sets[i], record.values, o.samples, o.seed, o.threads));
      } else {
        auto it = record.values.find(protected_variable);
        if (it == record.values.end()) {
          throw Error(ErrorCode::MissingEvidence,
                      record.label + " has no value for '" + protected_variable + "'");
        }
        dists.push_back(counterfactual_predict(m, record.values, protected_variable, it->second,
                                               o.samples, o.seed, o.threads));
      }
      const auto& d = dists.back();
      out << record.label << " " << m.label() << " " << o.mode << " mean=" << format_number(d.mean)
          << " se=" << format_number(d.standard_error);
      if (!fair) {
        try {
          out << " full_evidence=" << format_number(predict_full_evidence(m, record.values));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::MissingEvidence) throw;
        }
      }
      out << '\n';

      if (dir) {
        auto file_meta = meta;
        file_meta.emplace_back("candidate", record.label);
        file_meta.emplace_back("model", m.label());
        const std::string stem = record.label + "." + m.label() + "." + o.mode;
        write_file(*dir / (stem + ".samples.csv"), samples_csv(d, file_meta));
        try {
          write_file(*dir / (stem + ".kde.csv"), curve_csv(kde(d.samples), file_meta));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::TooFewSamples && e.code() != ErrorCode::NonpositiveBandwidth) {
            throw;
          }
          err << "note: no KDE for " << stem << ": " << e.what() << '\n';
        }
      }
    }

    auto report = nlohmann::ordered_json::parse(decision_report(dists, labels, op, record.label));
    nlohmann::ordered_json run;
    for (const auto& [k, v] : meta) run[k] = v;
    report["run"] = run;
    out << record.label << " pooled(" << o.pool
        << ")=" << format_number(report["pooled_value"].get<double>())
        << (report["multimodal"].get<bool>() ? " multimodal" : "") << '\n';
    if (dir) {
      write_file(*dir / (record.label + "." + o.mode + ".decision.json"), report.dump(2) + "\n");
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- fairness-check

int cmd_fairness_check(const Options& o, std::ostream& out, std::ostream& err) {
  const auto models = load_models(o);
  const auto spec = load_spec(o, models);
  const auto encoding = load_encoding(o);
  const auto records = load_evidence(o, encoding, models);
  for (const auto& w : model_set_warnings(models)) err << "warning: " << w << '\n';
  const auto protected_variable = protected_of(o, spec, records);

  std::vector<double> values;
  if (!o.values.empty()) {
    if (o.values.size() != 2) throw UsageError("--values takes exactly two values");
    for (const auto& token : o.values) {
      values.push_back(resolve_token(protected_variable, token, encoding));
    }
  } else {
    for (const auto& r : records) {
      auto it = r.values.find(protected_variable);
      if (it != r.values.end() && std::find(values.begin(), values.end(), it->second) == values.end()) {
        values.push_back(it->second);
      }
    }
    if (values.size() < 2) {
      throw UsageError("evidence holds fewer than two values of '" + protected_variable +
                       "'; pass --values");
    }
    values.resize(2);
  }
  const auto& record = records.front();
  const auto diagram = fair_diagram(o, models, spec);
  const auto dir = output_dir(o);

  bool all_fair = true;
  for (const auto& m : models) {
    const auto report = check_counterfactual_fairness(
        m, FairFeatureSet::from_diagram(diagram, m), record.values, protected_variable,
        values[0], values[1], o.samples, o.seed, o.tolerance, o.threads);
    const auto& path = o.mode == "fair" ? report.fair : report.unfair;
    all_fair = all_fair && path.verdict == Verdict::FairWithinTolerance;
    out << m.label() << " " << record.label << " " << protected_variable << "="
        << format_number(values[0]) << " vs " << format_number(values[1])
        << "  fair_gap=" << format_number(report.fair.gap) << " ("
        << to_string(report.fair.verdict) << ")  unfair_gap=" << format_number(report.unfair.gap)
        << " (" << to_string(report.unfair.verdict) << ")\n";
    if (dir) {
      auto json = nlohmann::ordered_json::parse(to_json(report));
      nlohmann::ordered_json run;
      for (const auto& [k, v] : metadata_of(o, models)) run[k] = v;
      run["candidate"] = record.label;
      run["mode"] = o.mode;
      json["run"] = run;
      write_file(*dir / ("fairness." + m.label() + ".json"), json.dump(2) + "\n");
    }
  }
  out << (all_fair ? "all verdicts fair_within_tolerance" : "violations found") << " (" << o.mode
      << " pipeline)\n";
  return all_fair ? kExitOk : kExitDomain;
}

void add_inputs(CLI::App* app, Options& o) {
  app->add_option("--models", o.models, "Model files (.scm)")->delimiter(',');
  app->add_option("--spec", o.spec, "Fairness specification (.fair)");
}

void add_aggregation(CLI::App* app, Options& o) {
  app->add_option("--rule", o.rule, "strict-majority | intersection | union");
  app->add_option("--order", o.order, "pooling-removal | removal-pooling");
  app->add_option("--tie-break", o.tie_break, "lexicographic | random:SEED");
  app->add_flag("--no-prune", o.no_prune, "Keep vertices cut off from the predictor");
}

void add_sampling(CLI::App* app, Options& o) {
  app->add_option("--encoding", o.encoding, "Token encodings (.enc)");
  app->add_option("--evidence", o.evidence, "Candidate records (.evd)");
  app->add_option("--candidate", o.candidate, "Only this evidence record");
  app->add_option("--dag", o.dag, "Use this fair diagram instead of aggregating");
  app->add_option("--samples", o.samples, "Monte Carlo sample count");
  app->add_option("--seed", o.seed, "RNG seed");
  app->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  app->add_option("--mode", o.mode, "fair | unfair");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Counterfactually fair aggregation of expert causal models", "fairpool"};
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "Parse and check input files");
  validate->add_option("files", o.files, "Files (.scm .fair .enc .evd .dag)")->required();

  auto* aggregate_cmd = app.add_subcommand("aggregate", "Pool the experts' fair causal diagram");
  add_inputs(aggregate_cmd, o);
  add_aggregation(aggregate_cmd, o);
  aggregate_cmd->add_option("--seed", o.seed, "Seed recorded in the output");

  auto* predict = app.add_subcommand("predict", "Score candidates");
  add_inputs(predict, o);
  add_aggregation(predict, o);
  add_sampling(predict, o);
  predict->add_option("--pool", o.pool, "mean | mixture | geometric");
  predict->add_option("--weights", o.weights, "Expert weights")->delimiter(',');
  predict->add_option("--protected", o.protected_variable, "Protected attribute (unfair mode)");

  auto* check = app.add_subcommand("fairness-check", "Check counterfactual fairness");
  add_inputs(check, o);
  add_aggregation(check, o);
  add_sampling(check, o);
  check->add_option("--protected", o.protected_variable, "Protected attribute");
  check->add_option("--values", o.values, "Two protected values, e.g. F,M")->delimiter(',');
  check->add_option("--tolerance", o.tolerance, "Absolute gap tolerance");

  for (auto* sub : {validate, aggregate_cmd, predict, check}) {
    sub->add_option("--out", o.out, "Output directory");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    validate_usage(o);
    if (validate->parsed()) return cmd_validate(o, out, err);
    if (aggregate_cmd->parsed()) return cmd_aggregate(o, out, err);
    if (predict->parsed()) return cmd_predict(o, out, err);
    return cmd_fairness_check(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::IoError ? kExitUsage : kExitDomain;
  }
}

}  // namespace fairpool::cli
