#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fairpool/aggregation.hpp"
#include "support/testkit.hpp"

using namespace fairpool;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const char* name) { return testkit::data_path(name); }

std::string models() { return data("alice.scm") + "," + data("bob.scm"); }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fairpool_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> predict_args(const fs::path& out, const std::string& mode) {
  return {"predict",   "--models",   models(),         "--spec",    data("phd.fair"),
          "--encoding", data("phd.enc"), "--evidence", data("applicants.evd"),
          "--samples", "20000",      "--seed",         "11",        "--mode",
          mode,        "--out",      out.string()};
}

nlohmann::json read_json(const fs::path& p) {
  return nlohmann::json::parse(testkit::read_text(p.string()));
}

}  // namespace

TEST_CASE("validate") {
  CHECK(run({"validate", data("alice.scm"), data("bob.scm"), data("phd.enc"), data("phd.fair"),
             data("applicants.evd")})
            .code == cli::kExitOk);

  const auto dir = scratch("validate");
  const auto bad = (dir / "bad.scm").string();
  std::ofstream(bad) << "model \"m\" {\n  predictor Y = Z\n}\n";
  const auto r = run({"validate", bad});
  CHECK(r.code == cli::kExitDomain);
  CHECK(r.out.find("bad.scm") != std::string::npos);
  CHECK(run({"validate", (dir / "missing.scm").string()}).code == cli::kExitUsage);
  CHECK(run({"validate", (dir / "notes.txt").string()}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("aggregate reproduces the golden pooled diagram") {
  const auto dir = scratch("aggregate");
  const auto r = run({"aggregate", "--models", models(), "--spec", data("phd.fair"), "--rule",
                      "strict-majority", "--order", "pooling-removal", "--out", dir.string()});
  REQUIRE(r.code == cli::kExitOk);
  const auto written = read_dag(testkit::read_text((dir / "fair.dag").string()));
  const auto golden = read_dag(testkit::read_text(testkit::golden_path("pooling_removal.dag")));
  CHECK(written == golden);

  const auto other = scratch("aggregate_rp");
  REQUIRE(run({"aggregate", "--models", models(), "--spec", data("phd.fair"), "--order",
               "removal-pooling", "--out", other.string()})
              .code == cli::kExitOk);
  CHECK(read_dag(testkit::read_text((other / "fair.dag").string())) ==
        read_dag(testkit::read_text(testkit::golden_path("removal_pooling.dag"))));
}

TEST_CASE("with two experts, intersection and strict majority agree") {
  const auto majority = run({"aggregate", "--models", models(), "--spec", data("phd.fair"),
                             "--rule", "strict-majority"});
  const auto intersection = run({"aggregate", "--models", models(), "--spec", data("phd.fair"),
                                 "--rule", "intersection"});
  REQUIRE(majority.code == cli::kExitOk);
  REQUIRE(intersection.code == cli::kExitOk);
  const auto dag = [](const std::string& out) { return read_dag(out.substr(out.find("---\n") + 4)); };
  CHECK(dag(majority.out) == dag(intersection.out));
  CHECK(run({"aggregate", "--models", models(), "--spec", data("phd.fair"), "--rule", "plurality"})
            .code == cli::kExitUsage);
}

TEST_CASE("predict: fair scores ignore gender, unfair scores do not") {
  const auto fair_dir = scratch("predict_fair");
  REQUIRE(run(predict_args(fair_dir, "fair")).code == cli::kExitOk);
  for (const char* model : {"alice", "bob"}) {
    const auto app1 = testkit::read_text(
        (fair_dir / ("App1." + std::string(model) + ".fair.samples.csv")).string());
    const auto app2 = testkit::read_text(
        (fair_dir / ("App2." + std::string(model) + ".fair.samples.csv")).string());
    CHECK(app1.substr(app1.find("index,y")) == app2.substr(app2.find("index,y")));
    CHECK(fs::exists(fair_dir / ("App1." + std::string(model) + ".fair.kde.csv")));
  }
  const auto d1 = read_json(fair_dir / "App1.fair.decision.json");
  const auto d2 = read_json(fair_dir / "App2.fair.decision.json");
  CHECK(d1["pooled_value"] == d2["pooled_value"]);
  CHECK(d1["run"]["seed"] == "11");

  const auto unfair_dir = scratch("predict_unfair");
  REQUIRE(run(predict_args(unfair_dir, "unfair")).code == cli::kExitOk);
  const auto u1 = read_json(unfair_dir / "App1.unfair.decision.json");
  const auto u2 = read_json(unfair_dir / "App2.unfair.decision.json");
  CHECK(std::abs(u1["pooled_value"].get<double>() - u2["pooled_value"].get<double>()) > 0.2);
}

TEST_CASE("predict refuses zero samples") {
  auto args = predict_args(scratch("predict_zero"), "fair");
  args[10] = "0";
  CHECK(run(args).code == cli::kExitUsage);
}

TEST_CASE("fairness-check exit codes follow the verdict") {
  const std::vector<std::string> base{
      "fairness-check", "--models", models(),          "--spec",     data("phd.fair"),
      "--encoding",     data("phd.enc"), "--evidence", data("applicants.evd"),
      "--protected",    "Gnd",      "--samples",       "20000",      "--seed", "5"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  };
  const auto dir = scratch("check");
  CHECK(with({"--mode", "fair", "--out", dir.string()}).code == cli::kExitOk);
  const auto report = read_json(dir / "fairness.alice.json");
  CHECK(report["verdict"] == "fair_within_tolerance");
  CHECK(report["unfair_verdict"] == "violation");
  CHECK(with({"--mode", "unfair"}).code == cli::kExitDomain);
  CHECK(with({"--mode", "unfair", "--values", "1,1"}).code == cli::kExitOk);
}

TEST_CASE("reruns are byte-identical") {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  REQUIRE(run(predict_args(a, "fair")).code == cli::kExitOk);
  REQUIRE(run(predict_args(b, "fair")).code == cli::kExitOk);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto twin = b / entry.path().filename();
    REQUIRE(fs::exists(twin));
    CHECK(testkit::read_text(entry.path().string()) == testkit::read_text(twin.string()));
    ++compared;
  }
  CHECK(compared >= 10);
}
