// End-to-end checks that drive the installed binary through a shell, so
// exit codes, artifact files and printed lines are all observed exactly as
// a user would see them.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

using cuisine::test::TempDir;
using cuisine::test::read_file;
using cuisine::test::write_file;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const TempDir& dir, const std::string& args) {
  const std::string out_path = dir.file("cmd_stdout.txt");
  const std::string err_path = dir.file("cmd_stderr.txt");
  const std::string cmd = std::string(CUISINE_BIN) + " " + args + " > " +
                          out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

/// Thirty separable records over three cuisines, each class named by a
/// marker ingredient.
void write_corpus(const std::string& path) {
  const std::vector<std::string> markers = {"miso", "basil", "cumin"};
  const std::vector<std::string> cuisines = {"Japanese", "Italian", "Indian"};
  std::ostringstream rows;
  for (int i = 0; i < 30; ++i) {
    const int c = i % 3;
    rows << "{\"id\": " << (i + 1) << ", \"cuisine\": \"" << cuisines[c]
         << "\", \"tokens\": [\"chop\", \"" << markers[c] << "\", \""
         << (i % 2 == 0 ? "salt" : "oil") << "\", \"" << markers[c]
         << "\", \"stir\"]}\n";
  }
  write_file(path, rows.str());
}

std::string write_config(const TempDir& dir, const std::string& corpus_path) {
  const std::string path = dir.file("exp.ini");
  write_file(path,
             "[data]\npath = " + corpus_path +
                 "\n"
                 "[split]\nseed = 11\n"
                 "[model]\nkind = nb\n"
                 "[logreg]\nepochs = 20\n"
                 "[svm]\nepochs = 20\n"
                 "[rf]\nn_trees = 6\nmax_depth = 4\n"
                 "[adaboost]\nn_rounds = 4\n"
                 "[features]\nmax_len = 8\n"
                 "[lstm]\nepochs = 1\nembed_dim = 8\nhidden_dim = 8\n"
                 "[transformer]\nepochs = 1\nembed_dim = 8\nhidden_dim = 8\n");
  return path;
}

}  // namespace

TEST_CASE("split reports the floor rule sizes and writes its artifacts") {
  TempDir dir;
  write_corpus(dir.file("corpus.jsonl"));
  const std::string config = write_config(dir, dir.file("corpus.jsonl"));

  const RunResult r =
      run(dir, "split -c " + config + " -o " + dir.file("out"));
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(contains(r.out, "train=21 val=3 test=6"));
  CHECK(!read_file(dir.file("out/split.json")).empty());
  CHECK(!read_file(dir.file("out/split.config.json")).empty());

  // Same seed, fresh directory: byte-identical manifest.
  const RunResult r2 =
      run(dir, "split -c " + config + " -o " + dir.file("out2"));
  REQUIRE(r2.exit_code == 0);
  CHECK(read_file(dir.file("out/split.json")) ==
        read_file(dir.file("out2/split.json")));

  // A different seed shuffles differently.
  const RunResult r3 = run(dir, "split -c " + config +
                                    " --set split.seed=12 -o " +
                                    dir.file("out3"));
  REQUIRE(r3.exit_code == 0);
  CHECK(read_file(dir.file("out/split.json")) !=
        read_file(dir.file("out3/split.json")));
}

TEST_CASE("a missing dataset exits 2 and names the path") {
  TempDir dir;
  const RunResult r = run(dir, "split --set data.path=" + dir.file("nope.jsonl") +
                                   " -o " + dir.file("out"));
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "nope.jsonl"));
}

TEST_CASE("bad flags and unknown subcommands exit 2") {
  TempDir dir;
  CHECK(run(dir, "frobnicate").exit_code == 2);
  CHECK(run(dir, "train --no-such-flag").exit_code == 2);
  CHECK(run(dir, "--set model.kind=nb train").exit_code == 2);  // global misuse
}

TEST_CASE("an unknown model kind exits 2 before any training") {
  TempDir dir;
  write_corpus(dir.file("corpus.jsonl"));
  const std::string config = write_config(dir, dir.file("corpus.jsonl"));
  const RunResult r = run(dir, "train -c " + config +
                                   " --set model.kind=perceptron -o " +
                                   dir.file("out"));
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "perceptron"));
}

TEST_CASE("train twice with one seed produces byte-identical models") {
  TempDir dir;
  write_corpus(dir.file("corpus.jsonl"));
  const std::string config = write_config(dir, dir.file("corpus.jsonl"));

  for (const std::string kind : {"nb", "svm", "lstm"}) {
    CAPTURE(kind);
    const RunResult a = run(dir, "train -c " + config + " --set model.kind=" +
                                     kind + " -o " + dir.file(kind + "_a"));
    CAPTURE(a.err);
    REQUIRE(a.exit_code == 0);
    const RunResult b = run(dir, "train -c " + config + " --set model.kind=" +
                                     kind + " -o " + dir.file(kind + "_b"));
    REQUIRE(b.exit_code == 0);
    const std::string model_a = read_file(dir.file(kind + "_a/model.json"));
    CHECK(!model_a.empty());
    CHECK(model_a == read_file(dir.file(kind + "_b/model.json")));
    CHECK(read_file(dir.file(kind + "_a/vocab.json")) ==
          read_file(dir.file(kind + "_b/vocab.json")));
  }
}

TEST_CASE("train then evaluate reports every partition deterministically") {
  TempDir dir;
  write_corpus(dir.file("corpus.jsonl"));
  const std::string config = write_config(dir, dir.file("corpus.jsonl"));
  const std::string out = dir.file("run");

  REQUIRE(run(dir, "split -c " + config + " -o " + out).exit_code == 0);
  REQUIRE(run(dir, "train -c " + config + " --split " + out +
                       "/split.json -o " + out)
              .exit_code == 0);

  const RunResult eval = run(dir, "evaluate --model " + out +
                                      "/model.json --split " + out +
                                      "/split.json --which test -o " + out);
  CAPTURE(eval.err);
  REQUIRE(eval.exit_code == 0);
  CHECK(contains(eval.out, "partition=test n=6"));
  CHECK(contains(eval.out, "Accuracy"));
  const std::string report = read_file(out + "/report-test.json");
  CHECK(contains(report, "\"accuracy\""));

  const RunResult again = run(dir, "evaluate --model " + out +
                                       "/model.json --split " + out +
                                       "/split.json --which test -o " + out);
  REQUIRE(again.exit_code == 0);
  CHECK(read_file(out + "/report-test.json") == report);

  // The marker corpus is fully separable, so held-out accuracy is perfect.
  CHECK(contains(eval.out, "100.00"));

  const RunResult val = run(dir, "evaluate --model " + out +
                                     "/model.json --split " + out +
                                     "/split.json --which validation -o " + out);
  REQUIRE(val.exit_code == 0);
  CHECK(contains(val.out, "partition=validation n=3"));

  CHECK(run(dir, "evaluate --model " + out + "/model.json --split " + out +
                     "/split.json --which survey -o " + out)
            .exit_code == 2);
}

TEST_CASE("evaluate rejects a vocabulary whose hash disagrees") {
  TempDir dir;
  write_corpus(dir.file("corpus.jsonl"));
  const std::string config = write_config(dir, dir.file("corpus.jsonl"));
  const std::string out = dir.file("run");
  REQUIRE(run(dir, "split -c " + config + " -o " + out).exit_code == 0);
  REQUIRE(run(dir, "train -c " + config + " --split " + out +
                       "/split.json -o " + out)
              .exit_code == 0);

  // Rebuild the vocabulary under a stricter document-frequency floor; the
  // hash moves, the model file does not.
  const std::string other = dir.file("other");
  REQUIRE(run(dir, "train -c " + config + " --set features.min_df=4 --split " +
                       out + "/split.json -o " + other)
              .exit_code == 0);
  write_file(out + "/vocab.json", read_file(other + "/vocab.json"));

  const RunResult r = run(dir, "evaluate --model " + out +
                                   "/model.json --split " + out +
                                   "/split.json --which test -o " + out);
  CHECK(r.exit_code == 1);
  CHECK(contains(r.err, "vocabulary mismatch"));
  CHECK(contains(r.err, "hash"));
}

TEST_CASE("predict classifies good lines and reports bad ones in place") {
  TempDir dir;
  write_corpus(dir.file("corpus.jsonl"));
  const std::string config = write_config(dir, dir.file("corpus.jsonl"));
  const std::string out = dir.file("run");
  REQUIRE(run(dir, "train -c " + config + " -o " + out).exit_code == 0);

  write_file(dir.file("queries.jsonl"),
             "{\"id\": 1, \"tokens\": [\"miso\", \"chop\"]}\n"
             "{\"id\": 2, \"tokens\": [\"basil\", \"oil\"]}\n"
             "this is not json\n"
             "{\"id\": 4}\n"
             "{\"id\": 5, \"tokens\": [\"cumin\"]}\n");
  const RunResult r = run(dir, "predict --model " + out + "/model.json -i " +
                                   dir.file("queries.jsonl") + " --output " +
                                   dir.file("pred.jsonl"));
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  const std::string pred = read_file(dir.file("pred.jsonl"));
  std::vector<std::string> lines;
  std::istringstream stream(pred);
  for (std::string line; std::getline(stream, line);) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(contains(lines[0], "\"cuisine\":\"Japanese\""));
  CHECK(contains(lines[1], "\"cuisine\":\"Italian\""));
  CHECK(contains(lines[2], "\"error\""));
  CHECK(contains(lines[2], "\"line\":3"));
  CHECK(contains(lines[3], "\"error\""));
  CHECK(contains(lines[4], "\"cuisine\":\"Indian\""));

  // Prediction is a pure function of model and input.
  const RunResult r2 = run(dir, "predict --model " + out + "/model.json -i " +
                                    dir.file("queries.jsonl") + " --output " +
                                    dir.file("pred2.jsonl"));
  REQUIRE(r2.exit_code == 0);
  CHECK(pred == read_file(dir.file("pred2.jsonl")));

  // Empty input: no output rows, still a clean exit.
  write_file(dir.file("empty.jsonl"), "");
  const RunResult r3 = run(dir, "predict --model " + out + "/model.json -i " +
                                    dir.file("empty.jsonl") + " --output " +
                                    dir.file("pred3.jsonl"));
  CHECK(r3.exit_code == 0);
  CHECK(read_file(dir.file("pred3.jsonl")).empty());
}

TEST_CASE("analyze prints corpus statistics and can write a report") {
  TempDir dir;
  write_corpus(dir.file("corpus.jsonl"));
  const std::string config = write_config(dir, dir.file("corpus.jsonl"));
  const RunResult r = run(dir, "analyze -c " + config + " --report " +
                                   dir.file("analysis.json"));
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(contains(r.out, "records=30 cuisines=3"));
  CHECK(contains(r.out, "Japanese  10"));
  CHECK(contains(r.out, "sparsity="));
  const std::string report = read_file(dir.file("analysis.json"));
  CHECK(contains(report, "\"records\": 30"));
}

TEST_CASE("gradcheck passes clean gradients and flags a corrupted one") {
  TempDir dir;
  const RunResult ok = run(dir, "gradcheck --model-kind logreg");
  CAPTURE(ok.err);
  CHECK(ok.exit_code == 0);
  CHECK(contains(ok.out, "PASS"));

  const RunResult bad = run(dir, "gradcheck --model-kind logreg --corrupt-gradient");
  CHECK(bad.exit_code == 1);
  CHECK(contains(bad.out, "FAIL"));

  CHECK(run(dir, "gradcheck --model-kind quantum").exit_code == 2);
}

TEST_CASE("compare runs every model kind and records the run manifest") {
  TempDir dir;
  write_corpus(dir.file("corpus.jsonl"));
  const std::string config = write_config(dir, dir.file("corpus.jsonl"));
  const std::string out = dir.file("cmp");
  const RunResult r = run(dir, "compare -c " + config + " -o " + out);
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);

  const std::string report = read_file(out + "/compare_report.json");
  for (const std::string kind : {"nb", "logreg", "svm", "rf", "adaboost",
                                 "lstm", "transformer"}) {
    CHECK(contains(report, "\"" + kind + "\""));
  }
  CHECK(contains(r.out, "Accuracy"));

  // Every path the manifest lists exists and is non-empty.
  const std::string manifest = read_file(out + "/run_manifest.json");
  CHECK(contains(manifest, "compare_report.json"));
  std::istringstream stream(manifest);
  for (std::string line; std::getline(stream, line);) {
    const std::size_t pos = line.find(out);
    if (pos == std::string::npos) continue;
    std::string path = line.substr(pos);
    const std::size_t quote = path.find('"');
    if (quote != std::string::npos) path.resize(quote);
    CHECK(!read_file(path).empty());
  }
}
