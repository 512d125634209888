#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "../../tools/cli.hpp"
#include "test_util.hpp"

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = repcause::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Exit status of the real binary, stdout and stderr discarded.
int run_binary(const std::string& args) {
  const std::string command = std::string(REPCAUSE_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

// Bytes as an external extraction tool would emit them: z and labels only.
std::string label_only_ptrz(std::uint32_t n, std::uint32_t d) {
  std::string s = "PTRZ";
  s.push_back('\x01');
  put_u32(s, n);
  put_u32(s, d);
  s.push_back('\x04');
  for (std::uint32_t i = 0; i < n * d; ++i) {
    const float v = static_cast<float>(i % 97) / 97.0f - 0.5f;
    char raw[4];
    std::memcpy(raw, &v, 4);
    s.append(raw, 4);
  }
  for (std::uint32_t i = 0; i < n; ++i) s.push_back(static_cast<char>(i % 2));
  return s;
}

std::string strip_header(const std::string& text) {
  std::istringstream in(text);
  std::string line, body;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) != 0) body += line + "\n";
  }
  return body;
}

}  // namespace

TEST_CASE("simulate, validate and estimate end to end") {
  test::TempDir dir;
  const std::string data = dir.file("a.ptrz");
  const Result sim = run({"simulate", "--n", "400", "--d", "16", "--seed", "3", "--out", data});
  REQUIRE(sim.code == 0);
  const auto meta = nlohmann::json::parse(sim.out);
  CHECK(meta["meta"]["command"] == "simulate");
  CHECK(meta["meta"]["config"]["n"] == "400");
  CHECK(meta["d"] == 16);

  const Result val = run({"validate", data});
  CHECK(val.code == 0);
  CHECK(val.out == "n = 400\nd = 16\nflags = t,y,label\n");

  const Result est =
      run({"estimate", "--method", "dml-aipw", "--g", "ols", "--m", "logistic", "--k", "2", "--seed", "1", data});
  REQUIRE(est.code == 0);
  const auto report = nlohmann::json::parse(est.out);
  for (const char* key : {"method", "estimate", "std_error", "ci_low", "ci_high", "level", "n", "folds", "warnings"}) {
    CHECK(report.contains(key));
  }
  CHECK(report["n"] == 400);
  CHECK(report["folds"] == 2);
  CHECK(report["ci_low"].get<double>() < report["estimate"].get<double>());
  CHECK(std::abs(report["estimate"].get<double>() - 2.0) < 4.0 * report["std_error"].get<double>());
  CHECK(report["meta"]["seed"] == "1");
}

TEST_CASE("validate accepts externally produced label-only PTRZ files") {
  test::TempDir dir;
  const std::string text = dir.file("text.ptrz");
  test::write_file(text, label_only_ptrz(10, 768));
  const Result r = run({"validate", "--expect_d", "768", "--expect_label", "true", text});
  CHECK(r.code == 0);
  CHECK(r.out == "n = 10\nd = 768\nflags = label\n");
  CHECK(run({"validate", "--expect_d", "1024", text}).code == 1);

  const std::string image = dir.file("image.ptrz");
  test::write_file(image, label_only_ptrz(3, 1024));
  CHECK(run({"validate", "--expect_d", "1024", "--expect_label", "true", image}).code == 0);
  CHECK(run_binary("validate --expect_d 1024 --expect_label true " + image) == 0);
}

TEST_CASE("exit codes") {
  test::TempDir dir;
  const std::string data = dir.file("a.ptrz");
  REQUIRE(run({"simulate", "--n", "200", "--d", "12", "--out", data}).code == 0);

  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"estimate", "--k", "two", data}).code == 2);
  CHECK(run({"estimate", "--method", "t-learner", data}).code == 2);
  CHECK(run({"estimate", "--k", "1", data}).code == 2);
  const Result missing = run({"validate", dir.file("absent.ptrz")});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("load error") != std::string::npos);
  test::write_file(dir.file("bad.ptrz"), "PTRX");
  CHECK(run({"validate", dir.file("bad.ptrz")}).code == 1);
  CHECK(run({"--version"}).code == 0);
  CHECK(run({"--version"}).out.find("0.1.0") != std::string::npos);

  CHECK(run_binary("validate " + data) == 0);
  CHECK(run_binary("validate " + dir.file("absent.ptrz")) == 1);
  CHECK(run_binary("estimate --bogus 1 " + data) == 2);
}

TEST_CASE("unknown keys are rejected and named") {
  test::TempDir dir;
  const std::string config = dir.file("c.toml");
  test::write_file(config, "reps = 3\nfoo = 1\n");
  const Result r = run({"experiment", "--config", config});
  CHECK(r.code == 2);
  CHECK(r.err.find("foo") != std::string::npos);
  const Result typed = run({"experiment", "--reps", "many"});
  CHECK(typed.code == 2);
  CHECK(typed.err.find("reps") != std::string::npos);
}

TEST_CASE("experiment output is byte-identical across runs and thread counts") {
  test::TempDir dir;
  const std::string config = dir.file("label.toml");
  test::write_file(config, "n = 300\nd = 10\nreps = 4\nseed = 9\nestimators = \"naive,oracle,dml-aipw:ols:logistic\"\n");
  const std::string a = dir.file("a.csv"), b = dir.file("b.csv"), c = dir.file("c.csv");
  REQUIRE(run({"experiment", "--config", config, "--out", a}).code == 0);
  REQUIRE(run({"experiment", "--config", config, "--out", b}).code == 0);
  REQUIRE(run({"experiment", "--config", config, "--out", c, "--threads", "3"}).code == 0);
  const std::string first = test::read_file(a);
  CHECK(first == test::read_file(b));
  CHECK(first == test::read_file(c));

  CHECK(first.rfind("# repcause 0.1.0 experiment\n", 0) == 0);
  CHECK(first.find("# seed = 9\n") != std::string::npos);
  CHECK(first.find("# reps = 4\n") != std::string::npos);
  CHECK(first.find("threads") == std::string::npos);
  const std::string body = strip_header(first);
  CHECK(body.rfind("rep,estimator,estimate,se,ci_low,ci_high,covered\n", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 1 + 4 * 3);

  // Flags override file keys.
  const std::string d = dir.file("d.csv");
  REQUIRE(run({"experiment", "--config", config, "--out", d, "--seed", "10"}).code == 0);
  CHECK(test::read_file(d).find("# seed = 10\n") != std::string::npos);
  CHECK(test::read_file(d) != first);
}

TEST_CASE("experiment summary carries KS statistics") {
  test::TempDir dir;
  const std::string summary = dir.file("s.json");
  REQUIRE(run({"experiment", "--n", "300", "--d", "10", "--reps", "5", "--estimators", "naive", "--out",
               dir.file("rows.csv"), "--summary", summary})
              .code == 0);
  const auto j = nlohmann::json::parse(test::read_file(summary));
  REQUIRE(j["estimators"].size() == 1);
  CHECK(j["estimators"][0].contains("ks_p_value"));
  CHECK(j["estimators"][0]["reps"] == 5);
}

TEST_CASE("id, rotate and rate subcommands") {
  test::TempDir dir;
  const std::string data = dir.file("m.csv");
  REQUIRE(run({"simulate", "--n", "500", "--d", "20", "--d_manifold", "2", "--label_sharpness", "0", "--out", data})
              .code == 0);
  const std::string csv = test::read_file(data);
  CHECK(csv.rfind("# repcause 0.1.0 simulate\n", 0) == 0);

  const Result id = run({"id", "--method", "mle", data});
  REQUIRE(id.code == 0);
  const auto j = nlohmann::json::parse(id.out);
  CHECK(j["method"] == "mle");
  CHECK(j["estimate"].get<double>() >= 1.0);
  CHECK(j["estimate"].get<double>() <= 3.0);
  CHECK(run({"id", "--method", "twonn", data}).code == 2);

  const Result rot = run({"rotate", "--rotations", "2", "--lasso_lambda", "0.1", data});
  REQUIRE(rot.code == 0);
  CHECK(strip_header(rot.out).rfind("rotations,nonzero_count\n", 0) == 0);

  const Result rate = run({"rate", "--dims", "5", "--n_grid", "50,100", "--test_n", "200", "--mlp_depth", "1",
                           "--mlp_width", "4", "--mlp_epochs", "2"});
  REQUIRE(rate.code == 0);
  CHECK(rate.out.find("# worst_case_pair = ") != std::string::npos);
  CHECK(rate.out.find("# slope d=5 = ") != std::string::npos);
}
