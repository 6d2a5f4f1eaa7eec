#include "scenario.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace nlflow::cli;
using nlohmann::json;

namespace {

const fs::path kConfigs = NLFLOW_CONFIG_DIR;

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("nlflow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static json load(const fs::path& p) { return json::parse(slurp(p)); }

    int run_cmd(Command cmd, const fs::path& config, const std::string& out,
                const Overrides& o = {}) {
        log_.str("");
        return run(cmd, config, dir_ / out, o, log_);
    }

    fs::path dir_;
    std::ostringstream log_;
};

}  // namespace

TEST_F(CliTest, TransferReportsMinimalTime) {
    const auto cfg = write("t.yaml", "transfer: {rho0: 0, rho1: 2}\n");
    ASSERT_EQ(run_cmd(Command::Transfer, cfg, "out"), kExitOk) << log_.str();
    const json d = load(dir_ / "out" / "diagnostics.json");
    EXPECT_DOUBLE_EQ(d["T"].get<double>(), 2.0);
    EXPECT_TRUE(d.contains("config"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "transfer.csv"));
}

TEST_F(CliTest, SimulateEquilibriumIsFlat) {
    ASSERT_EQ(run_cmd(Command::Simulate, kConfigs / "equilibrium.yaml", "out"), kExitOk) << log_.str();
    std::ifstream in(dir_ / "out" / "trajectory.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# columns: t,W,u,y,beta");
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# units:", 0), 0u);
    int rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        std::getline(ss, cell, ',');
        EXPECT_NEAR(std::stod(cell), 1.0, 1e-10);
        ++rows;
    }
    EXPECT_EQ(rows, 301);
    std::ifstream slice(dir_ / "out" / "slice_000.csv");
    std::getline(slice, line);
    EXPECT_EQ(line, "# columns: x,rho");
    const json s = load(dir_ / "out" / "summary.json");
    EXPECT_TRUE(s.contains("config"));
}

TEST_F(CliTest, RunsAreBitIdentical) {
    const auto cfg = kConfigs / "tracking.yaml";
    Overrides o;
    o.cells = 4;
    ASSERT_EQ(run_cmd(Command::Optimize, cfg, "a", o), kExitOk) << log_.str();
    ASSERT_EQ(run_cmd(Command::Optimize, cfg, "b", o), kExitOk) << log_.str();
    for (const char* f : {"report.json", "history.csv", "control.csv"}) {
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    }
    const json r = load(dir_ / "a" / "report.json");
    EXPECT_TRUE(r.contains("config"));
    EXPECT_EQ(r["config"]["optimize"]["cells"].get<int>(), 4);
}

TEST_F(CliTest, VerifyDelayedControl) {
    ASSERT_EQ(run_cmd(Command::Verify, kConfigs / "verify_delayed.yaml", "out"), kExitOk) << log_.str();
    const json c = load(dir_ / "out" / "certificate.json");
    EXPECT_TRUE(c["satisfied"].get<bool>());
    EXPECT_GE(c["slack"].get<double>(), 0.0);
    EXPECT_TRUE(c.contains("config"));
}

TEST_F(CliTest, VerifyUnsatisfiedExitCode) {
    // Claimed T shorter than the bound for the candidate: the target is not
    // reached, reported as an unsatisfied certificate or a config error.
    const auto cfg = write("v.yaml",
                           "verify:\n  rho0: 0\n  rho1: 1\n  T: 1.0\n  control: {breakpoints: [0, 5], "
                           "values: [1]}\n");
    const int code = run_cmd(Command::Verify, cfg, "out");
    EXPECT_NE(code, kExitOk);
}

TEST_F(CliTest, CrosscheckWritesTable) {
    Overrides o;
    o.cells = 100;
    ASSERT_EQ(run_cmd(Command::Crosscheck, kConfigs / "crosscheck.yaml", "out", o), kExitOk)
        << log_.str();
    const json c = load(dir_ / "out" / "crosscheck.json");
    ASSERT_EQ(c["levels"].size(), 5u);
    const auto& last = c["levels"].back();
    EXPECT_GT(last["ratio"].get<double>(), 1.6);
    EXPECT_LT(last["ratio"].get<double>(), 2.4);
}

TEST_F(CliTest, ConfigErrorsCarryLineNumbers) {
    const auto cfg = write("bad.yaml", "horizon: 2\nrho0: {constant: 1}\ncontrol: {constant: 1}\nbogus: 3\n");
    EXPECT_EQ(run_cmd(Command::Simulate, cfg, "out"), kExitConfig);
    EXPECT_NE(log_.str().find("line 4"), std::string::npos) << log_.str();
    EXPECT_NE(log_.str().find("bogus"), std::string::npos);

    const auto neg = write("neg.yaml", "horizon: 2\nrho0: {constant: 1}\ncontrol:\n  constant: -1\n");
    EXPECT_EQ(run_cmd(Command::Simulate, neg, "out"), kExitConfig);

    const auto both = write("both.yaml",
                            "horizon: 2\nrho0: {constant: 1}\ncontrol: {constant: 1}\n"
                            "boundary_density: {constant: 1}\n");
    EXPECT_EQ(run_cmd(Command::Simulate, both, "out"), kExitConfig);

    const auto syntax = write("syntax.yaml", "horizon: [1, 2\n");
    EXPECT_EQ(run_cmd(Command::Simulate, syntax, "out"), kExitConfig);
    EXPECT_NE(log_.str().find("line"), std::string::npos);
}

TEST_F(CliTest, SolverFailureWritesErrorJson) {
    const auto cfg = write("s.yaml",
                           "horizon: 1\nrho0: {constant: 2}\ncontrol: {constant: 1}\n"
                           "solver: {tol: 1.0e-15, max_iter: 1}\n");
    EXPECT_EQ(run_cmd(Command::Simulate, cfg, "out"), kExitSolver);
    const json e = load(dir_ / "out" / "error.json");
    EXPECT_EQ(e["error"], "solver failure");
    EXPECT_TRUE(e.contains("residual"));
}

TEST(CliParse, CommandsAndOverrides) {
    EXPECT_EQ(parse_command("simulate"), Command::Simulate);
    EXPECT_EQ(parse_command("crosscheck"), Command::Crosscheck);
    EXPECT_THROW(parse_command("plot"), ConfigError);
    auto c = parse_config("horizon: 1\nrho0: {constant: 0}\ncontrol: {constant: 0}\n");
    Overrides o;
    o.tol = 1e-8;
    o.seed = 5;
    apply_overrides(c, o);
    EXPECT_DOUBLE_EQ(c.solver.tol, 1e-8);
    EXPECT_EQ(c.seed, 5u);
    o.tol = -1.0;
    EXPECT_THROW(apply_overrides(c, o), ConfigError);
    const json echo = json::parse(config_echo(c));
    EXPECT_EQ(echo["seed"].get<int>(), 5);
}
