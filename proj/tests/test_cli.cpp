#include "doctest.h"

#include "../tools/cli.hpp"
#include "msmaad/io.hpp"
#include "test_util.hpp"

#include <sstream>

using namespace msmaad;
using msmaad::testing::slurp;
using msmaad::testing::spit;
using msmaad::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string str(const std::filesystem::path& p) { return p.string(); }

// simulate + pretrain on the attended envelope; returns the decoder path.
std::filesystem::path simulate_and_pretrain(const TempDir& dir, const std::string& spec,
                                            const std::string& lags) {
  spit(dir / "spec.json", spec);
  REQUIRE(run({"simulate", "--spec", str(dir / "spec.json"), "--out", str(dir / "rec")}).code == 0);
  const auto r = run({"pretrain", "--recording", str(dir / "rec"), "--lags", lags, "--out",
                      str(dir / "beta.json")});
  REQUIRE(r.code == 0);
  return dir / "beta.json";
}

double cosine(const Vector& a, const Vector& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

TEST_CASE("usage errors exit 2 and name the path") {
  TempDir dir;
  auto r = run({"pretrain", "--eeg", str(dir / "nope.csv"), "--attended", str(dir / "a.csv"),
                "--out", str(dir / "b.json")});
  CHECK(r.code == 2);
  CHECK(r.err.find("nope.csv") != std::string::npos);
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"fit", "--out", str(dir / "x")}).code == 2);
}

TEST_CASE("zero-length envelope exits 2") {
  TempDir dir;
  spit(dir / "eeg.csv", "a\n1\n2\n3\n");
  spit(dir / "att.csv", "env\n");
  const auto r = run({"pretrain", "--eeg", str(dir / "eeg.csv"), "--attended",
                      str(dir / "att.csv"), "--fs", "10", "--lags", "1", "--out",
                      str(dir / "b.json")});
  CHECK(r.code == 2);
}

TEST_CASE("simulate writes the requested length and prints the expected switch count") {
  TempDir dir;
  spit(dir / "spec.json", R"({"samples": 600, "fs_hz": 10, "seed": 3})");
  auto r = run({"simulate", "--spec", str(dir / "spec.json"), "--out", str(dir / "a")});
  REQUIRE(r.code == 0);
  const auto states = io::load_states(dir / "a" / "states.csv");
  CHECK(states.size() == 600);
  CHECK(states.size() / states.fs_hz() == doctest::Approx(60.0));

  spit(dir / "long.json", R"({"samples": 43200, "channels": 1, "lag_count": 1, "p_stay": 0.9999})");
  r = run({"simulate", "--spec", str(dir / "long.json"), "--out", str(dir / "b")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("expected chain switches: 4.32") != std::string::npos);

  spit(dir / "bad.json", R"({"samples": 10, "sigma": 1})");
  r = run({"simulate", "--spec", str(dir / "bad.json"), "--out", str(dir / "c")});
  CHECK(r.code == 2);
  CHECK(r.err.find("sigma") != std::string::npos);
}

TEST_CASE("simulate is byte-identical across runs, in both formats") {
  TempDir dir;
  spit(dir / "spec.json", R"({"samples": 300, "seed": 11, "segment_swap_s": 5})");
  for (const char* format : {"csv", "f32"}) {
    const std::string ext = std::string(".") + format;
    for (const char* out : {"a", "b"}) {
      REQUIRE(run({"simulate", "--spec", str(dir / "spec.json"), "--out", str(dir / out),
                   "--format", format})
                  .code == 0);
    }
    for (const std::string f : {"eeg" + ext, "env1" + ext, "env2" + ext, std::string("states.csv"),
                                std::string("true_params.json")}) {
      CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
  }
}

TEST_CASE("pretrain recovers the attended direction") {
  TempDir dir;
  const auto beta = simulate_and_pretrain(
      dir, R"({"samples": 6000, "channels": 4, "lag_count": 2, "sigma2": 0.25, "seed": 5})", "2");
  const auto dec = io::load_decoder(beta);
  const auto truth = io::read_json(dir / "rec" / "true_params.json");
  const auto b1 = truth["beta1"].get<std::vector<double>>();
  CHECK(dec.lag_count == 2);
  CHECK(cosine(dec.beta, Eigen::Map<const Vector>(b1.data(), 8)) > 0.9);
}

TEST_CASE("fit improves on the raw decoder; causal and lag-mismatch behaviour") {
  TempDir dir;
  const auto beta = simulate_and_pretrain(
      dir, R"({"samples": 6000, "channels": 4, "lag_count": 2, "sigma2": 1.0, "seed": 7})", "2");
  auto r = run({"fit", "--recording", str(dir / "rec"), "--beta", str(beta), "--out",
                str(dir / "fit"), "--p-stay", "0.999"});
  REQUIRE(r.code == 0);
  const auto summary = io::read_json(dir / "fit" / "fit_summary.json");
  const auto report = io::read_json(dir / "fit" / "report.json");
  CHECK(report["accuracy"].get<double>() > summary["init_map_accuracy"].get<double>());
  CHECK(slurp(dir / "fit" / "posteriors.csv").rfind("t,p1_filtered,p2_filtered,p1_smoothed,p2_smoothed\n", 0) == 0);

  r = run({"fit", "--recording", str(dir / "rec"), "--beta", str(beta), "--out",
           str(dir / "causal"), "--causal"});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "causal" / "posteriors.csv").rfind("t,p1_filtered,p2_filtered\n", 0) == 0);

  r = run({"fit", "--recording", str(dir / "rec"), "--beta", str(beta), "--out",
           str(dir / "bad"), "--lags", "3"});
  CHECK(r.code == 2);
  CHECK(r.err.find("lag_count") != std::string::npos);
}

TEST_CASE("fit fans out over recordings deterministically") {
  TempDir dir;
  spit(dir / "s1.json", R"({"samples": 800, "seed": 1})");
  spit(dir / "s2.json", R"({"samples": 800, "seed": 2})");
  REQUIRE(run({"simulate", "--spec", str(dir / "s1.json"), "--out", str(dir / "r1")}).code == 0);
  REQUIRE(run({"simulate", "--spec", str(dir / "s2.json"), "--out", str(dir / "r2")}).code == 0);
  REQUIRE(run({"pretrain", "--recording", str(dir / "r1"), "--lags", "2", "--out",
               str(dir / "b.json")}).code == 0);
  const auto serial = run({"fit", "--recording", str(dir / "r1"), "--recording", str(dir / "r2"),
                           "--beta", str(dir / "b.json"), "--out", str(dir / "o1")});
  const auto parallel = run({"fit", "--recording", str(dir / "r1"), "--recording",
                             str(dir / "r2"), "--beta", str(dir / "b.json"), "--out",
                             str(dir / "o2"), "--jobs", "2"});
  REQUIRE(serial.code == 0);
  REQUIRE(parallel.code == 0);
  CHECK(serial.out == parallel.out);
  for (const char* rec : {"r1", "r2"}) {
    CHECK(slurp(dir / "o1" / rec / "posteriors.csv") == slurp(dir / "o2" / rec / "posteriors.csv"));
  }
}

TEST_CASE("hmm: 72 minutes at 1 s windows gives 4320 windows") {
  TempDir dir;
  const auto beta = simulate_and_pretrain(
      dir, R"({"samples": 43200, "channels": 2, "lag_count": 1, "sigma2": 0.25, "seed": 4,
               "p_stay": 0.9999})", "1");
  const auto r = run({"hmm", "--recording", str(dir / "rec"), "--beta", str(beta), "--out",
                      str(dir / "hmm")});
  REQUIRE(r.code == 0);
  const auto gmm = io::read_json(dir / "hmm" / "gmm.json");
  CHECK(gmm["windows"].get<Index>() == 4320);
  const auto tp = io::load_posteriors(dir / "hmm" / "posteriors.csv");
  CHECK(tp.times_s.size() == 4320);
  CHECK(tp.times_s[0] == doctest::Approx(0.5));
  const auto report = io::read_json(dir / "hmm" / "report.json");
  CHECK(report["accuracy"].get<double>() > 0.9);
}

TEST_CASE("hmm with constant envelopes exits 2") {
  TempDir dir;
  std::string eeg = "c0\n", env = "e\n";
  CounterRng rng(1, 0);
  for (int i = 0; i < 100; ++i) {
    eeg += std::to_string(rng.normal()) + "\n";
    env += "1\n";
  }
  spit(dir / "eeg.csv", eeg);
  spit(dir / "env.csv", env);
  spit(dir / "beta.json", R"({"beta":[1.0],"mse":1.0,"lag_count":1,"direction":"future"})");
  const auto r = run({"hmm", "--eeg", str(dir / "eeg.csv"), "--env1", str(dir / "env.csv"),
                      "--env2", str(dir / "env.csv"), "--beta", str(dir / "beta.json"), "--out",
                      str(dir / "out"), "--fs", "10"});
  CHECK(r.code == 2);
}

TEST_CASE("eval reports") {
  TempDir dir;
  // 1800 samples at 10 Hz with switches at 600 and 1200 (60 s gaps).
  std::string truth = "state\n", perfect = "t,state\n", partial = "t,state\n";
  for (int t = 0; t < 1800; ++t) {
    const int s = t >= 600 && t < 1200 ? 2 : 1;
    // Detected 1 -> 2 at 620; the 2 -> 1 switch is never detected.
    const int p = t >= 620 ? 2 : 1;
    truth += std::to_string(s) + "\n";
    perfect += std::to_string(t / 10.0) + "," + std::to_string(s) + "\n";
    partial += std::to_string(t / 10.0) + "," + std::to_string(p) + "\n";
  }
  spit(dir / "truth.csv", truth);
  spit(dir / "perfect.csv", perfect);
  spit(dir / "partial.csv", partial);

  auto r = run({"eval", "--posteriors", str(dir / "perfect.csv"), "--truth",
                str(dir / "truth.csv"), "--out", str(dir / "a.json"), "--fs", "10"});
  REQUIRE(r.code == 0);
  auto rep = io::read_json(dir / "a.json");
  CHECK(rep["accuracy"].get<double>() == 1.0);
  CHECK(rep["switch_times_s"] == nlohmann::ordered_json::parse("[0.0, 0.0]"));

  r = run({"eval", "--posteriors", str(dir / "partial.csv"), "--truth", str(dir / "truth.csv"),
           "--out", str(dir / "b.json"), "--fs", "10"});
  REQUIRE(r.code == 0);
  rep = io::read_json(dir / "b.json");
  CHECK(rep["switch_times_s"][0].get<double>() == doctest::Approx(2.0));
  CHECK(rep["switch_times_s"][1].get<double>() == 60.0);
  CHECK(rep["missed_switches"].get<int>() == 1);

  std::string flat = "state\n";
  for (int t = 0; t < 1800; ++t) flat += "1\n";
  spit(dir / "flat.csv", flat);
  r = run({"eval", "--posteriors", str(dir / "perfect.csv"), "--truth", str(dir / "flat.csv"),
           "--out", str(dir / "c.json"), "--fs", "10"});
  REQUIRE(r.code == 0);
  rep = io::read_json(dir / "c.json");
  CHECK(rep["n_true_switches"].get<int>() == 0);
  CHECK(rep["switch_times_s"].empty());

  spit(dir / "short.csv", "state\n1\n2\n");
  r = run({"eval", "--posteriors", str(dir / "perfect.csv"), "--truth", str(dir / "short.csv"),
           "--out", str(dir / "d.json"), "--fs", "10"});
  CHECK(r.code == 2);
}
