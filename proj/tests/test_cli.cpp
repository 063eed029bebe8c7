#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "impedance/cli.hpp"
#include "xml_check.hpp"

using namespace impedance;
namespace fs = std::filesystem;

namespace {

const std::string kAnkle = std::string(IMPEDANCE_DATA_DIR) + "/ankle_representative.csv";
const std::string kKnee = std::string(IMPEDANCE_DATA_DIR) + "/knee_representative.csv";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("impedance_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "impedance");
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, EstimateSetBWritesArtifacts) {
  EXPECT_EQ(run({"estimate", "--input", kAnkle, "--set", "B", "--starts", "4", "--out", path("b")}), 0) << err_.str();
  for (auto f : {"params.json", "result.json", "trace.csv", "report.txt"}) EXPECT_TRUE(fs::exists(dir_ / "b" / f)) << f;
  const auto p = params_from_json(read_json(dir_ / "b" / "params.json"));
  EXPECT_EQ(p.schedule.sections(), 3u);
  EXPECT_EQ(p.schedule.label(), "B");
  EXPECT_EQ(read_text(dir_ / "b" / "trace.csv").rfind("iteration,cost,worst_violation\n", 0), 0u);
}

TEST_F(Cli, MissingFileExitsOneAndNamesPath) {
  EXPECT_EQ(run({"estimate", "--input", "/no/such/gait.csv", "--set", "B"}), 1);
  EXPECT_NE(err_.str().find("/no/such/gait.csv"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"estimate", "--input", kAnkle}), 1);  // no schedule
  EXPECT_EQ(run({"estimate", "--input", kAnkle, "--set", "E"}), 1);
  EXPECT_EQ(run({"estimate", "--input", kAnkle, "--set", "B", "--fit-window", "zero"}), 1);
  EXPECT_EQ(run({"evaluate", "--input", kAnkle}), 1);  // no params
}

TEST_F(Cli, UnfinishedSolveExitsTwo) {
  EXPECT_EQ(run({"estimate", "--input", kAnkle, "--set", "A", "--starts", "1", "--max-iters", "1", "--out", path("x")}),
            2)
      << err_.str();
  const auto r = result_from_json(read_json(dir_ / "x" / "result.json"));
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(fs::exists(dir_ / "x" / "params.json"));
}

TEST_F(Cli, KneeStanceOnly) {
  EXPECT_EQ(run({"estimate", "--input", kKnee, "--set", "D", "--fit-window", "0:0.63", "--joint", "knee", "--starts",
                 "2", "--out", path("knee")}),
            0)
      << err_.str();
  const auto p = params_from_json(read_json(dir_ / "knee" / "params.json"));
  EXPECT_EQ(p.schedule.sections(), 1u);
}

TEST_F(Cli, EvaluateFixtureCurves) {
  EXPECT_EQ(run({"evaluate", "--fixture", "A", "--input", kAnkle, "--out", path("ev"), "--svg"}), 0) << err_.str();
  const auto csv = read_text(dir_ / "ev" / "curves.csv");
  EXPECT_EQ(csv.rfind("phase,K,D,theta_eq,tau_model,tau_data,power\n0,2.21,0.12,0.0294,", 0), 0u);
  for (auto f : {"stiffness.svg", "damping.svg", "torque.svg"}) {
    const auto doc = read_text(dir_ / "ev" / f);
    EXPECT_TRUE(xmlcheck::well_formed(doc)) << f;
  }
  EXPECT_EQ(xmlcheck::count(read_text(dir_ / "ev" / "stiffness.svg"), "<polyline"), 1u);
  EXPECT_EQ(xmlcheck::count(read_text(dir_ / "ev" / "torque.svg"), "<polyline"), 2u);
}

TEST_F(Cli, EvaluateZeroImpedance) {
  ImpedanceParameters zero(ImpedanceProfile({0.0}), ImpedanceProfile({0.0}), EquilibriumSchedule({0.0, 1.0}, {0.2}));
  write_json(dir_ / "zero.json", to_json(zero));
  EXPECT_EQ(run({"evaluate", "--params", path("zero.json"), "--input", kAnkle, "--out", path("z")}), 0);
  std::istringstream in(read_text(dir_ / "z" / "curves.csv"));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 7u);
    EXPECT_EQ(std::stod(cells[4]), 0.0);
    ++rows;
  }
  EXPECT_EQ(rows, 1001);
}

TEST_F(Cli, TuneSetC) {
  EXPECT_EQ(run({"tune", "--fixture", "C", "--alpha", "0.5", "--beta", "0.166", "--gamma", "20", "--out", path("t")}), 0);
  const auto p = params_from_json(read_json(dir_ / "t" / "params.json"));
  EXPECT_DOUBLE_EQ(p.stiffness.coeffs()[0], 0.5 * 0.75 + 20.0);
  EXPECT_DOUBLE_EQ(p.damping.coeffs()[0], 0.166 * 0.18);
  EXPECT_EQ(run({"tune", "--fixture", "C", "--alpha", "-1"}), 1);
  EXPECT_EQ(run({"tune", "--fixture", "B", "--angles", "-0.1745,-0.2617,0", "--out", path("t2")}), 0);
  EXPECT_EQ(params_from_json(read_json(dir_ / "t2" / "params.json")).schedule.angles()[1], -0.2617);
}

TEST_F(Cli, SynthIsByteIdentical) {
  ASSERT_EQ(run({"tune", "--fixture", "D", "--alpha", "0.5", "--beta", "0", "--gamma", "25", "--out", path("p")}), 0);
  const auto params = path("p/params.json");
  for (auto o : {"s1", "s2"})
    ASSERT_EQ(run({"synth", "--params", params, "--input", kAnkle, "--noise", "0.5", "--seed", "7", "--out", path(o)}),
              0)
        << err_.str();
  EXPECT_EQ(read_text(dir_ / "s1" / "synthetic.csv"), read_text(dir_ / "s2" / "synthetic.csv"));
  ASSERT_EQ(run({"synth", "--params", params, "--input", kAnkle, "--noise", "0.5", "--seed", "8", "--out", path("s3")}),
            0);
  EXPECT_NE(read_text(dir_ / "s1" / "synthetic.csv"), read_text(dir_ / "s3" / "synthetic.csv"));
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  write_text(dir_ / "cfg.json",
             "{\"set\": \"C\", \"starts\": 1, \"seed\": 4, \"order-k\": 2, \"order-d\": 2, \"input\": \"" + kAnkle +
                 "\"}");
  EXPECT_EQ(run({"estimate", "--config", path("cfg.json"), "--set", "D", "--out", path("c")}), 0) << err_.str();
  const auto r = result_from_json(read_json(dir_ / "c" / "result.json"));
  EXPECT_EQ(r.params.schedule.label(), "D");
  EXPECT_EQ(r.params.stiffness.order(), 2);
  EXPECT_EQ(r.seed, 4u);
}

TEST_F(Cli, ReportOverFourResults) {
  std::vector<std::string> files;
  for (char label : {'D', 'A', 'C', 'B'}) {
    EstimationResult r{reference::parameters(label)};
    r.cost = 100.0 + label;
    r.converged = true;
    r.constraint_report = validate(r.params, 101);
    const auto f = path(std::string("r") + label + ".json");
    write_json(f, to_json(r));
    files.push_back(f);
  }
  std::string joined = files[0] + "," + files[1] + "," + files[2] + "," + files[3];
  EXPECT_EQ(run({"report", "--results", joined, "--out", path("rep")}), 0) << err_.str();
  const auto text = read_text(dir_ / "rep" / "comparison.txt");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_LT(text.find("\nA "), text.find("\nD "));
  EXPECT_EQ(read_json(dir_ / "rep" / "comparison.json").size(), 4u);
  EXPECT_TRUE(fs::exists(dir_ / "rep" / "comparison.csv"));
  EXPECT_EQ(run({"report", "--out", path("rep2")}), 1);
}

}  // namespace
