#include <cstdlib>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sllda/corpus.hpp"
#include "test_support.hpp"

using namespace sllda;
using testsup::TempDir;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CmdResult run_cli(const TempDir& tmp, const std::string& args) {
  static int counter = 0;
  const char* cli = std::getenv("SLLDA_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "SLLDA_CLI must point at the built binary");
  const std::string out_path = tmp.file("cli_out_" + std::to_string(counter));
  const std::string err_path = tmp.file("cli_err_" + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string("\"") + cli + "\" " + args + " > " +
                          out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  CmdResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = testsup::read_file(out_path);
  result.err = testsup::read_file(err_path);
  return result;
}

// Small separable data set written in the repository text format.
void write_dataset(const TempDir& tmp, const std::string& train_name,
                   const std::string& test_name, std::uint64_t seed = 99,
                   std::size_t train_docs = 24, std::size_t test_docs = 8) {
  std::mt19937_64 rng(seed);
  const Corpus train = testsup::random_corpus(rng, train_docs, 10, 4, 5, 2);
  const Corpus test = testsup::random_corpus(rng, test_docs, 10, 4, 5, 2);
  save_corpus(train, tmp.file(train_name));
  save_corpus(test, tmp.file(test_name));
}

int count_occurrences(const std::string& haystack, const std::string& needle) {
  int count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

TEST_CASE("train logs the retained sample count") {
  TempDir tmp;
  write_dataset(tmp, "train.txt", "test.txt");

  SUBCASE("defaults retain thirty samples") {
    const CmdResult r = run_cli(
        tmp, "train --train " + tmp.file("train.txt") + " --model " +
                 tmp.file("model"));
    CHECK(r.exit_code == 0);
    CHECK(r.err.find("samples_retained=30") != std::string::npos);
  }
  SUBCASE("short schedule retains two samples") {
    const CmdResult r = run_cli(
        tmp, "train --train " + tmp.file("train.txt") + " --model " +
                 tmp.file("model2") + " --iterations 60 --burnin 50 --lag 5");
    CHECK(r.exit_code == 0);
    CHECK(r.err.find("samples_retained=2") != std::string::npos);
  }
}

TEST_CASE("missing input files exit with the data code and the path") {
  TempDir tmp;
  const CmdResult r = run_cli(
      tmp, "train --train " + tmp.file("no_such_file.txt") + " --model " +
               tmp.file("model"));
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("no_such_file.txt") != std::string::npos);
}

TEST_CASE("usage errors exit with code one") {
  TempDir tmp;
  const CmdResult r = run_cli(tmp, "predict --model x --test y");
  CHECK(r.exit_code == 1);
}

TEST_CASE("prediction pipeline end to end") {
  TempDir tmp;
  write_dataset(tmp, "train.txt", "test.txt");
  const std::string schedule = " --iterations 40 --burnin 10 --lag 3";
  REQUIRE(run_cli(tmp, "train --train " + tmp.file("train.txt") + " --model " +
                           tmp.file("model") + schedule)
              .exit_code == 0);

  SUBCASE("same configuration and seed give byte-identical score files") {
    const std::string base = "predict --model " + tmp.file("model") +
                             " --test " + tmp.file("test.txt") + schedule +
                             " --seed 7 --out ";
    REQUIRE(run_cli(tmp, base + tmp.file("a.txt")).exit_code == 0);
    REQUIRE(run_cli(tmp, base + tmp.file("b.txt")).exit_code == 0);
    CHECK(testsup::read_file(tmp.file("a.txt")) ==
          testsup::read_file(tmp.file("b.txt")));
    CHECK_FALSE(testsup::read_file(tmp.file("a.txt")).empty());
  }
  SUBCASE("subset with candidates forced to all equals plain prediction") {
    const std::string common = " --test " + tmp.file("test.txt") + schedule +
                               " --seed 11 --model " + tmp.file("model");
    REQUIRE(run_cli(tmp, "predict --method llda" + common + " --out " +
                             tmp.file("llda.txt"))
                .exit_code == 0);
    REQUIRE(run_cli(tmp, "predict --method subset --candidates all" + common +
                             " --out " + tmp.file("subset.txt"))
                .exit_code == 0);
    CHECK(testsup::read_file(tmp.file("llda.txt")) ==
          testsup::read_file(tmp.file("subset.txt")));
  }
  SUBCASE("retrieve output feeds candidate-restricted prediction") {
    REQUIRE(run_cli(tmp, "retrieve --train " + tmp.file("train.txt") +
                             " --test " + tmp.file("test.txt") +
                             " --neighbors 3 --out " + tmp.file("cands.txt"))
                .exit_code == 0);
    const std::string cands = testsup::read_file(tmp.file("cands.txt"));
    CHECK(count_occurrences(cands, "\n") == 8);
    const CmdResult r = run_cli(
        tmp, "predict --method subset --candidates " + tmp.file("cands.txt") +
                 " --model " + tmp.file("model") + " --test " +
                 tmp.file("test.txt") + schedule + " --seed 3 --out " +
                 tmp.file("sub.txt"));
    CHECK(r.exit_code == 0);
    CHECK(r.err.find("mean_candidates=") != std::string::npos);
  }
  SUBCASE("smoothing can be overridden at load time") {
    const std::string base = "predict --model " + tmp.file("model") +
                             " --test " + tmp.file("test.txt") + schedule +
                             " --seed 5 --out ";
    REQUIRE(run_cli(tmp, base + tmp.file("default_beta.txt")).exit_code == 0);
    REQUIRE(run_cli(tmp, base + tmp.file("same_beta.txt") + " --beta 0.01")
                .exit_code == 0);
    REQUIRE(run_cli(tmp, base + tmp.file("flat_beta.txt") + " --beta 50")
                .exit_code == 0);
    // the stored value is the training default, so passing it changes nothing
    CHECK(testsup::read_file(tmp.file("default_beta.txt")) ==
          testsup::read_file(tmp.file("same_beta.txt")));
    // a very large smoothing flattens the distributions and changes scores
    CHECK(testsup::read_file(tmp.file("default_beta.txt")) !=
          testsup::read_file(tmp.file("flat_beta.txt")));
  }
  SUBCASE("model/test dimension mismatch is a data error") {
    std::mt19937_64 rng(1);
    const Corpus other = testsup::random_corpus(rng, 6, 17, 4, 5, 2);
    save_corpus(other, tmp.file("other.txt"));
    const CmdResult r = run_cli(
        tmp, "predict --model " + tmp.file("model") + " --test " +
                 tmp.file("other.txt") + schedule + " --out " +
                 tmp.file("mismatch.txt"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("features") != std::string::npos);
  }
  SUBCASE("dep without an auxiliary model is a usage error") {
    const CmdResult r = run_cli(
        tmp, "predict --method dep --model " + tmp.file("model") + " --test " +
                 tmp.file("test.txt") + schedule + " --out " +
                 tmp.file("dep.txt"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("aux") != std::string::npos);
  }
}

TEST_CASE("evaluate reports metrics and kv output") {
  TempDir tmp;
  // Five labels, every document carries all five, scores rank them on top.
  std::string data = "3 6 5\n";
  std::string scores;
  for (int m = 0; m < 3; ++m) {
    data += "0,1,2,3,4 " + std::to_string(m) + ":1\n";
    scores += std::to_string(m) + "\t0:0.500000 1:0.200000 2:0.150000" +
              " 3:0.100000 4:0.050000\n";
  }
  testsup::write_file(tmp.file("gold.txt"), data);
  testsup::write_file(tmp.file("scores.txt"), scores);

  SUBCASE("perfect scores give all ones under unit propensities") {
    const CmdResult r = run_cli(
        tmp, "evaluate --scores " + tmp.file("scores.txt") + " --gold " +
                 tmp.file("gold.txt") +
                 " --rcut-t 5 --unit-propensity --format kv");
    CHECK(r.exit_code == 0);
    // exactly the documented keys, all metrics at one
    CHECK(r.out ==
          "micro_f=1.000000\nmacro_f=1.000000\np@1=1.000000\np@5=1.000000\n"
          "psp@1=1.000000\npsp@5=1.000000\nrcut_t=5\n");
  }
  SUBCASE("custom k list shows exactly those cutoffs") {
    const CmdResult r = run_cli(
        tmp, "evaluate --scores " + tmp.file("scores.txt") + " --gold " +
                 tmp.file("gold.txt") +
                 " --rcut-t 5 --unit-propensity --format kv --k 1,3");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("p@3=") != std::string::npos);
    CHECK(r.out.find("p@5=") == std::string::npos);
  }
  SUBCASE("document count mismatch is a data error") {
    testsup::write_file(tmp.file("short.txt"), "0\t0:0.900000\n");
    const CmdResult r = run_cli(
        tmp, "evaluate --scores " + tmp.file("short.txt") + " --gold " +
                 tmp.file("gold.txt") + " --rcut-t 5");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("comparison emits z-test verdicts") {
    const CmdResult r = run_cli(
        tmp, "evaluate --scores " + tmp.file("scores.txt") + " --gold " +
                 tmp.file("gold.txt") + " --compare " + tmp.file("scores.txt") +
                 " --rcut-t 5 --unit-propensity --format kv");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("ztest.p@1.verdict=") != std::string::npos);
  }
}

TEST_CASE("reproduce prints the four-method table") {
  TempDir tmp;
  write_dataset(tmp, "bibtex_train.txt", "bibtex_test.txt", 5, 30, 10);
  const CmdResult r = run_cli(
      tmp, "reproduce --dataset bibtex --workdir " + tmp.dir() +
               " --runs 2 --iterations 30 --burnin 10 --lag 5 --topics 4"
               " --format kv");
  CHECK(r.exit_code == 0);
  for (const std::string method : {"llda", "prior", "dep", "subset"}) {
    for (const std::string metric :
         {"micro_f", "macro_f", "p@1", "p@5", "psp@1", "psp@5"}) {
      CHECK(r.out.find(method + "." + metric + "=") != std::string::npos);
    }
  }
  CHECK(count_occurrences(r.out, "=") == 24);

  SUBCASE("text format has one row per metric") {
    const CmdResult t = run_cli(
        tmp, "reproduce --dataset bibtex --workdir " + tmp.dir() +
                 " --runs 1 --iterations 30 --burnin 10 --lag 5 --topics 4");
    CHECK(t.exit_code == 0);
    CHECK(t.out.find("llda") != std::string::npos);
    CHECK(t.out.find("subset") != std::string::npos);
    CHECK(count_occurrences(t.out, "\n") == 8);  // header + banner + 6 rows
  }
  SUBCASE("missing dataset files are a data error naming the path") {
    const CmdResult e = run_cli(
        tmp, "reproduce --dataset delicious --workdir " + tmp.dir());
    CHECK(e.exit_code == 2);
    CHECK(e.err.find("delicious_train.txt") != std::string::npos);
  }
}

TEST_CASE("reproduce single-run numbers match the manual pipeline") {
  TempDir tmp;
  write_dataset(tmp, "bibtex_train.txt", "bibtex_test.txt", 8, 30, 10);
  const std::string schedule = " --iterations 30 --burnin 10 --lag 5";
  const CmdResult repro = run_cli(
      tmp, "reproduce --dataset bibtex --workdir " + tmp.dir() +
               " --runs 1 --seed 21" + schedule + " --topics 4 --format kv");
  REQUIRE(repro.exit_code == 0);

  REQUIRE(run_cli(tmp, "train --train " + tmp.file("bibtex_train.txt") +
                           " --model " + tmp.file("model") + schedule +
                           " --seed 21")
              .exit_code == 0);
  REQUIRE(run_cli(tmp, "predict --model " + tmp.file("model") + " --test " +
                           tmp.file("bibtex_test.txt") + schedule +
                           " --method llda --seed 21 --out " +
                           tmp.file("scores.txt"))
              .exit_code == 0);
  const CmdResult manual = run_cli(
      tmp, "evaluate --scores " + tmp.file("scores.txt") + " --gold " +
               tmp.file("bibtex_test.txt") + " --train " +
               tmp.file("bibtex_train.txt") + " --format kv");
  REQUIRE(manual.exit_code == 0);

  // every manual metric line must appear as llda.<metric> in the table
  std::stringstream lines(manual.out);
  std::string line;
  int matched = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("rcut_t=", 0) == 0) continue;
    CHECK(repro.out.find("llda." + line + "\n") != std::string::npos);
    matched++;
  }
  CHECK(matched == 6);
}
