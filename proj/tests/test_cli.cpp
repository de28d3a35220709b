#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(REPULSION_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("repulsion_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string write(const std::string& name, const std::string& content) {
    std::ofstream(dir / name) << content;
    return (dir / name).string();
  }

  fs::path dir;
};

const char* kAntipodal = "# manifold: sphere:2\nw,x1,x2,x3\n0.5,0,0,1\n0.5,0,0,-1\n";
const char* kCollinear = "# manifold: euclidean:1\nw,x1\n0.33333333333333331,0\n0.33333333333333331,0.5\n0.33333333333333337,1\n";

}  // namespace

TEST_F(Cli, MinimizeAntipodalCollapse) {
  const auto r = run("minimize --manifold sphere:2 --kernel power:delta=3 --atoms 40 --restarts 5 --seed 7 --out " +
                     dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_NEAR(j["final_energy"].get<double>(), -15.5031, 1e-4);
  EXPECT_EQ(j["support_card"], 2);
  EXPECT_EQ(j["config"]["seed"], 7);
  EXPECT_EQ(j["config"]["kernel"], "power:delta=3");
  EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
  EXPECT_EQ(slurp(dir / "trajectory.csv").rfind("iter,energy,grad_norm,support_card", 0), 0u);
}

TEST_F(Cli, MinimizeMissingKernel) {
  const auto r = run("minimize --manifold sphere:2 --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("kernel"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "summary.json"));
}

TEST_F(Cli, MinimizeSingleAtom) {
  const auto r = run("minimize --kernel power:delta=3 --atoms 1 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(j["final_energy"], 0.0);
  EXPECT_EQ(j["iterations"], 0);
}

TEST_F(Cli, StrictOptionsAndConfigFile) {
  EXPECT_EQ(run("minimize --kernel power:delta=3 --bogus 1").code, 2);
  EXPECT_EQ(run("minimize --kernel power:delta=3 --atoms many").code, 2);
  EXPECT_EQ(run("minimize --kernel power:delta=0").code, 2);
  EXPECT_EQ(run("minimize --kernel power:delta=3 --step -1").code, 2);
  const auto cfg = write("run.cfg", "# comment\nkernel = power:delta=3\natoms=3\nseed=4\n");
  ASSERT_EQ(run("minimize --config " + cfg + " --atoms 1 --out " + dir.string()).code, 0);
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(j["config"]["atoms"], 1);  // the flag wins
  EXPECT_EQ(j["config"]["seed"], 4);
  const auto bad = write("bad.cfg", "kernel=power:delta=3\nunknown_key=1\n");
  EXPECT_EQ(run("minimize --config " + bad + " --out " + dir.string()).code, 2);
  EXPECT_EQ(run("minimize --config " + dir.string() + "/absent.cfg").code, 2);
}

TEST_F(Cli, CertifyExitCodes) {
  const auto pair = write("pair.csv", kAntipodal);
  auto r = run("certify " + pair + " --kernel power:delta=3 --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  for (const char* name : {"constant_potential", "second_variation", "sqrt_triangle"}) {
    const auto j = nlohmann::json::parse(slurp(dir / (std::string(name) + ".json")));
    EXPECT_EQ(j["passed"], true) << name;
    EXPECT_TRUE(j.contains("config"));
  }

  const auto triple = write("triple.csv", kCollinear);
  r = run("certify " + triple + " --kernel power:delta=3 --r0 1.0 --ball-radius 1.0 --out " + dir.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("sqrt_triangle"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir / "sqrt_triangle.json"));
  EXPECT_EQ(j["passed"], false);
  EXPECT_NEAR(j["worst_margin"].get<double>(), (1 / std::sqrt(2.0) - 1), 1e-12);

  EXPECT_EQ(run("certify " + write("empty.csv", "") + " --kernel power:delta=3").code, 2);
  EXPECT_EQ(run("certify " + dir.string() + "/absent.csv --kernel power:delta=3").code, 2);
}

TEST_F(Cli, CertifyNestedSupports) {
  const auto pair = write("pair.csv", kAntipodal);
  const auto dirac = write("dirac.csv", "# manifold: sphere:2\nw,x1,x2,x3\n1,0,0,1\n");
  const auto r = run("certify " + dirac + " --kernel power:delta=3 --compare " + pair + " --out " + dir.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("nested_support"), std::string::npos);
}

TEST_F(Cli, Dinf) {
  const auto a = write("a.csv", "# manifold: sphere:2\nw,x1,x2,x3\n1,0,0,1\n");
  const auto b = write("b.csv", "# manifold: sphere:2\nw,x1,x2,x3\n1,1,0,0\n");
  auto r = run("dinf " + a + " " + a);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0\n");
  r = run("dinf " + a + " " + b);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1.5707963267948966\n");
  const auto c = write("c.csv", "# manifold: euclidean:2\nw,x1,x2\n1,0,0\n");
  EXPECT_EQ(run("dinf " + a + " " + c).code, 2);
}

TEST_F(Cli, PlotIsDeterministic) {
  const auto pair = write("pair.csv", kAntipodal);
  ASSERT_EQ(run("plot " + pair + " " + (dir / "a.svg").string()).code, 0);
  ASSERT_EQ(run("plot " + pair + " " + (dir / "b.svg").string()).code, 0);
  const auto svg = slurp(dir / "a.svg");
  EXPECT_EQ(svg, slurp(dir / "b.svg"));
  EXPECT_NE(svg.find("viewBox=\"0 0 800 800\""), std::string::npos);

  std::string ring = "# manifold: sphere:1\nw,x1,x2\n";
  for (int i = 0; i < 20; ++i) {
    char line[128];
    std::snprintf(line, sizeof line, "0.05,%.17g,%.17g\n", std::cos(2 * std::numbers::pi * i / 20),
                  std::sin(2 * std::numbers::pi * i / 20));
    ring += line;
  }
  ASSERT_EQ(run("plot " + write("ring.csv", ring) + " " + (dir / "ring.svg").string()).code, 0);
  const auto rs = slurp(dir / "ring.svg");
  std::size_t markers = 0;
  for (auto pos = rs.find("<circle"); pos != std::string::npos; pos = rs.find("<circle", pos + 1)) ++markers;
  EXPECT_EQ(markers, 21u);  // outline plus 20 atoms

  EXPECT_EQ(run("plot " + write("empty.csv", "# manifold: sphere:2\nw,x1,x2,x3\n") + " " + (dir / "e.svg").string()).code, 2);
  EXPECT_FALSE(fs::exists(dir / "e.svg"));
  EXPECT_EQ(run("plot " + write("s3.csv", "# manifold: sphere:3\nw,x1,x2,x3,x4\n1,0,0,0,1\n") + " " +
                (dir / "f.svg").string()).code, 2);
}

TEST_F(Cli, MeasureReemitIsByteIdentical) {
  ASSERT_EQ(run("minimize --kernel power:delta=3 --atoms 6 --max-iters 50 --out " + dir.string()).code, 0);
  const auto first = slurp(dir / "final_measure.csv");
  const auto out2 = dir / "again";
  ASSERT_EQ(run("minimize --kernel power:delta=3 --init " + (dir / "final_measure.csv").string() +
                " --max-iters 0 --out " + out2.string()).code, 0);
  EXPECT_EQ(slurp(out2 / "final_measure.csv"), first);
}

TEST_F(Cli, SweepPhaseTable) {
  const auto r = run("sweep --manifold sphere:1 --deltas -1,1,3 --atoms 20 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream table(slurp(dir / "phase_table.csv"));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "delta,final_energy,support_card,max_cluster_diameter,status");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(table, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][2], "20");
  EXPECT_NEAR(std::stod(rows[1][1]), -std::numbers::pi / 2, 2e-4);
  EXPECT_EQ(rows[2][2], "2");
  for (const auto& row : rows) EXPECT_EQ(row[4], "ok");
}
