#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(WEAKID_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path out_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("weakid_cli_" + name);
    fs::remove_all(d);
    return d;
}

std::string preset(const std::string& name) { return std::string(WEAKID_CONFIG_DIR) + "/" + name; }

}  // namespace

TEST(Cli, ExitCodes) {
    const fs::path d = out_dir("codes");
    EXPECT_EQ(run_cli("simulate --out " + d.string()), 0);
    EXPECT_EQ(run_cli("simulate --set grid.bogus=1 --out " + d.string()), 2);
    EXPECT_EQ(run_cli("nonsense --out " + d.string()), 2);
    EXPECT_EQ(run_cli("simulate --config /no/such.cfg --out " + d.string()), 2);
    EXPECT_EQ(run_cli("sweep --e-grid 0.2,0.1 --out " + d.string()), 2);
    EXPECT_EQ(run_cli("estimate --set estimate.data=/no/such.csv --out " + d.string()), 2);
    EXPECT_EQ(run_cli("simulate --out /proc/forbidden"), 1);
}

TEST(Cli, SimulateWritesTrajectoryAndManifest) {
    const fs::path d = out_dir("sim");
    ASSERT_EQ(run_cli("simulate --config " + preset("example2-sir.cfg") + " --set simulate.e=0.1 --out " + d.string()), 0);
    const std::string traj = slurp(d / "trajectory.csv");
    EXPECT_EQ(traj.substr(0, traj.find('\n')), "t,S,I,R");
    EXPECT_NE(slurp(d / "observations.csv").find("t,truth,y"), std::string::npos);
    const std::string manifest = slurp(d / "manifest.json");
    for (const char* key : {"\"command\"", "\"version\"", "\"seed\"", "\"config\"", "\"started_utc\"", "\"outputs\""})
        EXPECT_NE(manifest.find(key), std::string::npos) << key;
}

TEST(Cli, EstimateRoundTripsExternalData) {
    const fs::path d = out_dir("est");
    ASSERT_EQ(run_cli("simulate --config " + preset("example1-blood.cfg") + " --set simulate.e=0.02 --out " + d.string()), 0);
    // Feed the observation file back as external data (t, truth, y -> t, y).
    std::ifstream in(d / "observations.csv");
    std::ofstream out(d / "data.csv");
    std::string line;
    std::getline(in, line);
    out << "t,y\n";
    while (std::getline(in, line)) out << line.substr(0, line.find(',')) << "," << line.substr(line.rfind(',') + 1) << "\n";
    out.close();
    ASSERT_EQ(run_cli("estimate --config " + preset("example1-blood.cfg") + " --set estimate.data=" +
                      (d / "data.csv").string() + " --out " + d.string()),
              0);
    EXPECT_NE(slurp(d / "estimate.csv").find("w3"), std::string::npos);
    EXPECT_NE(slurp(d / "estimate.json").find("sigma_used"), std::string::npos);
}

TEST(Cli, SweepByteIdenticalAcrossThreads) {
    const std::string common = " --config " + preset("example2-sir.cfg") + " --D 30 --e-grid 0:0.4:0.1 --set sweep.keep_estimates=true";
    const fs::path a = out_dir("det1"), b = out_dir("det4");
    ASSERT_EQ(run_cli("sweep" + common + " --threads 1 --out " + a.string()), 0);
    ASSERT_EQ(run_cli("sweep" + common + " --threads 4 --out " + b.string()), 0);
    for (const char* f : {"sweep.csv", "eqmap.csv", "summary.json", "replicates.csv", "plotdata/relerr.dat",
                          "plotdata/coverage.json"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_FALSE(slurp(a / "sweep.csv").empty());
}

TEST(Cli, FlagsOverrideSetWhichOverridesFile) {
    const fs::path d = out_dir("prec");
    ASSERT_EQ(run_cli("sweep --config " + preset("example2-sir.cfg") +
                      " --set sweep.D=7 --D 3 --e-grid 0.1 --set sweep.seed=5 --out " + d.string()),
              0);
    const std::string m = slurp(d / "manifest.json");
    EXPECT_NE(m.find("\"sweep.D\": \"3\""), std::string::npos);
    EXPECT_NE(m.find("\"sweep.seed\": \"5\""), std::string::npos);
    EXPECT_NE(m.find("\"model.name\": \"sir\""), std::string::npos);
}

TEST(Cli, RankCheckAndEqMap) {
    const fs::path d = out_dir("rank");
    ASSERT_EQ(run_cli("rank-check --config " + preset("example1-blood.cfg") + " --out " + d.string()), 0);
    const std::string r = slurp(d / "ranks.json");
    EXPECT_NE(r.find("\"rank_G\": 3"), std::string::npos);
    EXPECT_NE(r.find("\"rank_phi0\": 15"), std::string::npos);
    ASSERT_EQ(run_cli("eq-map --config " + preset("example2-sir.cfg") + " --D 10 --e-grid 0,1 --q-grid 0.1,0.5 --out " +
                      d.string()),
              0);
    EXPECT_EQ(slurp(d / "eqmap.csv").substr(0, 10), "e,0.1,0.5\n");
    EXPECT_TRUE(fs::exists(d / "min_q.csv"));
    EXPECT_TRUE(fs::exists(d / "eqmap_aposteriori.csv"));
}
