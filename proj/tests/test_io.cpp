#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmhj/io.hpp"

using namespace cmhj;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}
fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("cmhj_io_" + name);
    fs::remove_all(d);
    return d;
}
}  // namespace

TEST(Io, GridFunctionRoundTrip) {
    const auto d = scratch("grid");
    const auto g = GridFunction::sample([](double x) { return std::exp(x); }, -1.0, 2.0, 31, -1.0,
                                        [](double x) { return std::exp(x); });
    io::write_grid_function(d, "g", g);
    const auto h = io::read_grid_function(d / "g.csv");
    ASSERT_EQ(h.n, g.n);
    for (int i = 0; i < g.n; ++i) {
        EXPECT_DOUBLE_EQ(h.values[i], g.values[i]);
        EXPECT_DOUBLE_EQ(h.slopes[i], g.slopes[i]);
    }
    const auto hdr = nlohmann::json::parse(slurp(d / "g.json"));
    for (const char* k : {"lo", "hi", "n", "lip"}) EXPECT_TRUE(hdr.contains(k)) << k;
    EXPECT_EQ(hdr["n"], 31);
}

TEST(Io, MalformedCsvRejected) {
    const auto d = scratch("bad");
    io::write_text(d / "bad.csv", "x,value\n0,1\n0.5,oops\n1,2\n");
    EXPECT_THROW(io::read_grid_function(d / "bad.csv"), Error);
    io::write_text(d / "gap.csv", "x,value\n0,1\n0.3,1\n1,2\n");
    EXPECT_THROW(io::read_grid_function(d / "gap.csv"), Error);
}

TEST(Io, FrontColumnsAndDeterminism) {
    const auto d = scratch("front");
    FrontSample s;
    s.t = 0.5;
    s.x0 = 0.1;
    s.p = JetPoint<1>{{0.2}, {-0.3}, 1.0 / 3.0};
    s.fold_flag = 1;
    io::write_front(d / "a.csv", {s, s});
    io::write_front(d / "b.csv", {s, s});
    const auto a = slurp(d / "a.csv");
    EXPECT_EQ(a, slurp(d / "b.csv"));
    EXPECT_EQ(a.substr(0, a.find('\n')), "t,x0,x,y,z,fold_flag");
    EXPECT_NE(a.find("0.333333333333333"), std::string::npos);
}

TEST(Io, TraceManifest) {
    const auto d = scratch("trace");
    SolutionTrace tr;
    tr.partition = Partition::uniform(0.0, 1.0, 1);
    tr.times = {0.0, 1.0};
    const auto g = GridFunction::sample([](double x) { return x; }, 0.0, 1.0, 3);
    tr.snapshots = {g, g};
    tr.certificates = {StepCertificate{0, 1.0, 1.0, 1.0, 0.01, 0, 0}};
    const auto m = io::write_trace(d, tr);
    EXPECT_TRUE(fs::exists(d / "snapshot_000.csv"));
    EXPECT_TRUE(fs::exists(d / "snapshot_001.csv"));
    EXPECT_EQ(m["snapshots"].size(), 2u);
    EXPECT_EQ(slurp(d / "snapshot_001.csv"), "x,u\n0,0\n0.5,0.5\n1,1\n");
}

TEST(Io, PlotScriptsAndReadme) {
    const auto d = scratch("plot");
    EXPECT_EQ(io::write_plot_script(d, "front", "gnuplot"), "plot.gp");
    EXPECT_EQ(io::write_plot_script(d, "snapshots", "python"), "plot.py");
    EXPECT_THROW(io::write_plot_script(d, "front", "excel"), Error);
    io::write_run_readme(d, "t", "cmd", {{"f.csv", "a,b", "m"}});
    EXPECT_NE(slurp(d / "README.md").find("| `f.csv` | a,b | m |"), std::string::npos);
}
