#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "gpmkl/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "gpmkl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = gpmkl::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("gpmkl-cli-") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  // Two well separated classes on a 3x3x2 grid.
  void make_toy() {
    const Result r = run({"generate", "--dims", "3,3,2", "--layout", "slices", "--informative", "0",
                          "--effect", "5", "--n", "10", "--seed", "4", "--out", p("data")});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"bogus"}).code, 1);
  EXPECT_EQ(run({"generate", "--dims", "3,3"}).code, 1);  // no --out
  EXPECT_EQ(run({"generate", "--dims", "3,x,3", "--out", p("d")}).code, 1);
  EXPECT_EQ(run({"generate", "--dims", "4,4,4", "--layout", "cube:2", "--informative", "99", "--out", p("d")}).code, 1);
}

TEST_F(CliTest, TrainPredictSeparableToy) {
  make_toy();
  Result r = run({"train", "--data", p("data"), "--kernel", "lin", "--layout", "slices", "--out", p("model")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("models: 1"), std::string::npos);
  // Sample 1 belongs to class 1.
  r = run({"predict", "--model", p("model"), "--input", p("data/vol_00001.gpmk")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("label: 1"), std::string::npos) << r.out;
  const double prob = std::stod(r.out.substr(r.out.find("probability: ") + 13));
  EXPECT_GT(prob, 0.5);
  r = run({"predict", "--model", p("model"), "--input", p("data/vol_00000.gpmk")});
  EXPECT_NE(r.out.find("label: 0"), std::string::npos) << r.out;
}

TEST_F(CliTest, ThreeClassTrainUsesOneVsAll) {
  ASSERT_EQ(run({"generate", "--dims", "3,3,3", "--layout", "slices", "--classes", "3", "--informative", "1",
                 "--effect", "6", "--n", "8", "--out", p("data")})
                .code,
            0);
  Result r = run({"train", "--data", p("data"), "--kernel", "lin", "--layout", "slices", "--inference", "la",
                  "--out", p("model")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("models: 3"), std::string::npos);
  r = run({"predict", "--model", p("model"), "--input", p("data/vol_00002.gpmk")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("label: 2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("probability 0: "), std::string::npos);
}

TEST_F(CliTest, CvReportAndRelevance) {
  make_toy();
  const Result a = run({"cv", "--data", p("data"), "--kernel", "se", "--layout", "slices", "--folds", "5", "--seed",
                        "2", "--report", p("r1")});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("mean_accuracy: 1"), std::string::npos) << a.out;
  const Result b = run({"cv", "--data", p("data"), "--kernel", "se", "--layout", "slices", "--folds", "5", "--seed",
                        "2", "--jobs", "2", "--report", p("r2")});
  EXPECT_EQ(a.out, b.out);
  const Result rel = run({"relevance", "--report", p("r1")});
  ASSERT_EQ(rel.code, 0) << rel.err;
  EXPECT_NE(rel.out.find("folds: 5"), std::string::npos);
  EXPECT_NE(rel.out.find("ranking: 0 "), std::string::npos) << rel.out;
}

TEST_F(CliTest, RelevanceOfDominantBagIsTen) {
  std::ofstream report(p("report"));
  report << "gpmkl-cv-report 1\n";
  for (int f = 0; f < 10; ++f) report << "weights " << f << ": 0.5 9 0.25\n";
  report.close();
  const Result r = run({"relevance", "--report", p("report")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("bag 1: 10\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("bag 0: 0.555556\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("ranking: 1 0 2"), std::string::npos);
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(run({"train", "--data", p("nothing"), "--out", p("m")}).code, 2);
  EXPECT_EQ(run({"predict", "--model", p("nothing"), "--input", p("v")}).code, 2);
  EXPECT_EQ(run({"relevance", "--report", p("nothing")}).code, 2);
  make_toy();
  ASSERT_EQ(run({"train", "--data", p("data"), "--kernel", "lin", "--out", p("model")}).code, 0);
  gpmkl::write_volume(p("odd.gpmk"), {{2, 2, 2}, std::vector<float>(8, 0.0f)});
  EXPECT_EQ(run({"predict", "--model", p("model"), "--input", p("odd.gpmk")}).code, 2);
}

TEST_F(CliTest, BadOptionValuesAreUsageErrors) {
  make_toy();
  EXPECT_EQ(run({"train", "--data", p("data"), "--kernel", "rbf", "--out", p("m")}).code, 1);
  EXPECT_EQ(run({"train", "--data", p("data"), "--layout", "cube:0", "--out", p("m")}).code, 1);
  EXPECT_EQ(run({"train", "--data", p("data"), "--inference", "exact", "--out", p("m")}).code, 1);
  ASSERT_EQ(run({"generate", "--dims", "2,2,2", "--layout", "slices", "--classes", "3", "--n", "4", "--out", p("three")}).code, 0);
  EXPECT_EQ(run({"cv", "--data", p("three"), "--report", p("r")}).code, 1);
}
