#include "support.hpp"

#include "weakid/error.hpp"
#include "weakid/output.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace weakid;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("weakid_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(ParseList, CommaAndRange) {
    EXPECT_EQ(parse_list("1, 2.5,3"), (std::vector<double>{1, 2.5, 3}));
    const auto r = parse_list("0:0.3:0.1");
    ASSERT_EQ(r.size(), 4u);
    EXPECT_EQ(r[3], 0.3);
    EXPECT_EQ(parse_list("0:2:0.1").size(), 21u);
    EXPECT_EQ(parse_list("0:2:0.1")[3], 0.3);
    EXPECT_THROW(parse_list("1,x"), std::exception);
    EXPECT_THROW(parse_list("2:1:0.1"), std::exception);
}

TEST(Settings, DefaultsAndOverrides) {
    Settings s;
    EXPECT_EQ(s.get("model.name"), "blood_diffusion");
    s.apply_override("sweep.D=17");
    EXPECT_EQ(s.get_int("sweep.D"), 17);
    EXPECT_THROW(s.apply_override("sweep.nope=1"), ConfigError);
    EXPECT_THROW(s.apply_override("no_equals"), ConfigError);
    try {
        s.set("grid.spacing", "1");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("grid.spacing"), std::string::npos);
    }
}

TEST(Settings, TypedGettersReject) {
    Settings s;
    s.set("grid.points", "abc");
    EXPECT_THROW(s.get_int("grid.points"), ConfigError);
    s.set("output.walltime", "maybe");
    EXPECT_THROW(s.get_bool("output.walltime"), ConfigError);
    s.set("sweep.e_grid", "0.1,,");
    EXPECT_THROW(s.get_list("sweep.e_grid"), ConfigError);
}

TEST(Settings, FromStringWithComments) {
    const Settings s = Settings::from_string("; comment\n[grid]\npoints = 77\n[sweep]\nD = 3\n");
    EXPECT_EQ(s.get_int("grid.points"), 77);
    EXPECT_EQ(s.get_int("sweep.D"), 3);
    EXPECT_THROW(Settings::from_string("[grid]\nbogus = 1\n"), ConfigError);
    EXPECT_THROW(Settings::from_file("/nonexistent/file.cfg"), ConfigError);
}

TEST(Settings, PresetsEncodeExperiments) {
    const SweepConfig a = weakid::testing::sweep1();
    EXPECT_EQ(a.experiment.model, ModelKind::BloodDiffusion);
    EXPECT_EQ(a.experiment.K, 15);
    EXPECT_EQ(a.experiment.test_function.degree, 12);
    EXPECT_EQ(a.experiment.test_function.radius, 0.52);
    EXPECT_EQ(a.D, 1000u);
    EXPECT_EQ(a.e_grid.size(), 21u);
    EXPECT_EQ(a.q_grid.size(), 100u);
    const SweepConfig b = weakid::testing::sweep2();
    EXPECT_EQ(b.experiment.model, ModelKind::Sir);
    EXPECT_EQ(b.experiment.variant, WeakVariant::SirIO);
    EXPECT_EQ(b.experiment.grid.size(), 31u);
    EXPECT_EQ(b.experiment.K, 4);
    EXPECT_EQ(b.e_grid.back(), 2.0);
}

TEST(Settings, InvalidExperimentIsConfigError) {
    Settings s;
    s.set("model.params", "1, 2");
    EXPECT_THROW(sweep_config_from(s), ConfigError);
    Settings t;
    t.set("model.name", "sir");
    t.set("model.params", "5.5e-4, 5, 1e4");
    t.set("model.y0", "9999, 1, 0");
    t.set("weakform.variant", "blood_io");
    EXPECT_THROW(sweep_config_from(t), ConfigError);
}

TEST(FormatNumber, RoundTripAndNa) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333333333");
    EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
    EXPECT_EQ(format_number(std::nan("")), "NA");
    EXPECT_EQ(format_number(5.5e-4), "0.00055");
}

TEST(Table, CsvAndDat) {
    Table t({"e", "x"});
    t.add({"0.1", "2"});
    EXPECT_EQ(t.csv(), "e,x\n0.1,2\n");
    EXPECT_EQ(t.dat().substr(0, 1), "#");
    EXPECT_THROW(t.add({"1"}), Error);
}

TEST(Table, GridOfOnes) {
    BoolGrid g = BoolGrid::Constant(2, 2, true);
    EXPECT_EQ(grid_table(g, {0.0, 0.1}, {0.5, 1.0}).csv(), "e,0.5,1\n0,1,1\n0.1,1,1\n");
}

TEST(Output, AtomicWriteLeavesNoTemporaries) {
    const fs::path d = scratch_dir("atomic");
    write_file_atomic(d / "a.csv", "x\n1\n");
    write_file_atomic(d / "a.csv", "x\n2\n");
    EXPECT_EQ(slurp(d / "a.csv"), "x\n2\n");
    int n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(d)) ++n;
    EXPECT_EQ(n, 1);
    EXPECT_THROW(write_file_atomic(d / "missing" / "a.csv", "x"), Error);
}

TEST(Output, PlotDataTwins) {
    const fs::path d = scratch_dir("plot");
    Table t({"e", "rel_err"});
    t.add({"0", "NA"});
    t.add({"0.1", "0.25"});
    const auto files = emit_plotdata(d, "relerr", t);
    ASSERT_EQ(files.size(), 2u);
    EXPECT_NE(slurp(d / "relerr.json").find("0.25"), std::string::npos);
    EXPECT_NE(slurp(d / "relerr.json").find("null"), std::string::npos);
    EXPECT_NE(slurp(d / "relerr.dat").find("0.1 0.25"), std::string::npos);
}

TEST(Output, SweepTableColumns) {
    SweepConfig c = weakid::testing::sweep2();
    c.e_grid = {0.1, 0.2};
    c.D = 3;
    const SweepResult r = run_sweep(c);
    const std::string csv = sweep_table(r, false).csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "e,param,mse,rel_err,coverage,n_converged,median_walltime_s");
    EXPECT_NE(csv.find(",NA\n"), std::string::npos);
    const std::string cov = coverage_table(r).csv();
    EXPECT_EQ(cov.substr(0, cov.find('\n')), "e,param,coverage");
    EXPECT_LT(cov.find("0.1,beta"), cov.find("0.2,beta"));
}
