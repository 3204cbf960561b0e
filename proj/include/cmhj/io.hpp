#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cmhj/errors.hpp"
#include "cmhj/grid_function.hpp"
#include "cmhj/iterated.hpp"
#include "cmhj/wavefront.hpp"

// Text output. Numbers go through one fixed format so that identical inputs
// give byte-identical files.

namespace cmhj::io {

using json = nlohmann::ordered_json;

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorKind::config, "cannot write " + p.string());
    f << s;
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline json grid_header(const GridFunction& g) {
    json h;
    h["lo"] = g.lo;
    h["hi"] = g.hi;
    h["n"] = g.n;
    h["lip"] = g.lip;
    h["extrapolation"] = to_string(g.extrapolation);
    h["interpolation"] = g.hermite() ? "cubic_hermite" : "linear";
    return h;
}

/// <stem>.csv with x,value (and slope when carried) plus <stem>.json header.
inline void write_grid_function(const std::filesystem::path& dir, const std::string& stem, const GridFunction& g) {
    std::ostringstream s;
    s << (g.hermite() ? "x,value,slope\n" : "x,value\n");
    for (int i = 0; i < g.n; ++i) {
        s << num(g.node(i)) << ',' << num(g.values[i]);
        if (g.hermite()) s << ',' << num(g.slopes[i]);
        s << '\n';
    }
    write_text(dir / (stem + ".csv"), s.str());
    write_json(dir / (stem + ".json"), grid_header(g));
}

/// Reads a grid function written by write_grid_function.
inline GridFunction read_grid_function(const std::filesystem::path& csv) {
    std::ifstream f(csv);
    if (!f) throw Error(ErrorKind::config, "cannot read " + csv.string());
    std::string line;
    std::getline(f, line);
    const bool slopes = line.find("slope") != std::string::npos;
    std::vector<double> xs, vs, ss;
    int ln = 1;
    while (std::getline(f, line)) {
        ++ln;
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string a, b, c;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        if (slopes) std::getline(ls, c, ',');
        try {
            xs.push_back(std::stod(a));
            vs.push_back(std::stod(b));
            if (slopes) ss.push_back(std::stod(c));
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, csv.string() + ":" + std::to_string(ln) + ": malformed row");
        }
    }
    if (xs.size() < 2) throw Error(ErrorKind::config, csv.string() + ": need at least two rows");
    const double lo = xs.front(), hi = xs.back();
    const double dx = (hi - lo) / (xs.size() - 1);
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::abs(xs[i] - (lo + i * dx)) > 1e-9 * (1.0 + std::abs(xs[i])))
            throw Error(ErrorKind::config, csv.string() + ": nodes are not uniform");
    return GridFunction(lo, hi, std::move(vs), -1.0, Extrapolation::clamped_slope, std::move(ss));
}

/// snapshot_NNN.csv per snapshot plus manifest.json.
inline json write_trace(const std::filesystem::path& dir, const SolutionTrace& tr, json extra = json::object()) {
    json m;
    m["partition"] = tr.partition.times;
    m["partition_norm"] = tr.partition.norm();
    json snaps = json::array();
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%03zu", k);
        std::ostringstream s;
        s << "x,u\n";
        const GridFunction& g = tr.snapshots[k];
        for (int i = 0; i < g.n; ++i) s << num(g.node(i)) << ',' << num(g.values[i]) << '\n';
        write_text(dir / (std::string(name) + ".csv"), s.str());
        json e;
        e["index"] = k;
        e["t"] = tr.times[k];
        e["file"] = std::string(name) + ".csv";
        e["grid"] = grid_header(g);
        if (k > 0) {
            const StepCertificate& c = tr.certificates[k - 1];
            e["lip_bound"] = c.lip_bound;
            e["lip_measured"] = c.lip_measured;
            e["grid_tol"] = c.grid_tol;
            e["unsnapped"] = c.unsnapped;
            e["fold_passes"] = c.fold_passes;
            e["by_persistence"] = c.by_persistence;
            e["refined"] = c.refined;
        }
        snaps.push_back(e);
    }
    m["snapshots"] = snaps;
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_json(dir / "manifest.json", m);
    return m;
}

inline void write_time_series(const std::filesystem::path& dir, const TimeSeries& ts, const std::string& prefix) {
    json m;
    json frames = json::array();
    for (std::size_t k = 0; k < ts.frames.size(); ++k) {
        char name[48];
        std::snprintf(name, sizeof name, "%s_%03zu", prefix.c_str(), k);
        std::ostringstream s;
        s << "x,u\n";
        const GridFunction& g = ts.frames[k];
        for (int i = 0; i < g.n; ++i) s << num(g.node(i)) << ',' << num(g.values[i]) << '\n';
        write_text(dir / (std::string(name) + ".csv"), s.str());
        frames.push_back(json{{"index", k}, {"t", ts.times[k]}, {"file", std::string(name) + ".csv"}});
    }
    m["frames"] = frames;
    write_json(dir / (prefix + "_manifest.json"), m);
}

/// Front CSV: t,x0,x,y,z,fold_flag.
inline void write_front(const std::filesystem::path& p, const std::vector<FrontSample>& front) {
    std::ostringstream s;
    s << "t,x0,x,y,z,fold_flag\n";
    for (const auto& f : front)
        s << num(f.t) << ',' << num(f.x0) << ',' << num(f.p.x[0]) << ',' << num(f.p.y[0]) << ',' << num(f.p.z)
          << ',' << f.fold_flag << '\n';
    write_text(p, s.str());
}

inline void write_table(const std::filesystem::path& p, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows) {
    std::ostringstream s;
    for (std::size_t i = 0; i < header.size(); ++i) s << (i ? "," : "") << header[i];
    s << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << num(r[i]);
        s << '\n';
    }
    write_text(p, s.str());
}

/// Per-run README listing every data file and its columns.
struct FileDoc {
    std::string file;
    std::string columns;
    std::string meaning;
};

inline void write_run_readme(const std::filesystem::path& dir, const std::string& title, const std::string& command,
                             const std::vector<FileDoc>& docs) {
    std::ostringstream s;
    s << "# " << title << "\n\n";
    s << "Produced by `" << command << "`. All numbers use `%.17g` (round-trip exact); rerunning the same\n"
         "configuration reproduces every data file byte for byte.\n\n";
    s << "| file | columns | meaning |\n|---|---|---|\n";
    for (const auto& d : docs) s << "| `" << d.file << "` | " << d.columns << " | " << d.meaning << " |\n";
    write_text(dir / "README.md", s.str());
}

/// Convenience plotting script (python/matplotlib or gnuplot). `kind` selects
/// the layout: "snapshots", "front", "compare", "convergence".
inline std::string write_plot_script(const std::filesystem::path& dir, const std::string& kind,
                                     const std::string& interpreter) {
    std::ostringstream s;
    std::string name;
    if (interpreter == "gnuplot") {
        name = "plot.gp";
        s << "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n";
        if (kind == "front") {
            s << "set output 'front.png'\nplot 'front.csv' using 3:5:1 with points palette pt 7 ps 0.3\n";
        } else if (kind == "convergence") {
            s << "set output 'convergence.png'\nset logscale xy\nplot 'convergence.csv' using 1:3 with linespoints\n";
        } else if (kind == "compare") {
            s << "set output 'compare.png'\nplot 'compare.csv' using 1:2 with lines, '' using 1:3 with lines, '' using "
                 "1:4 with lines\n";
        } else {
            s << "set output 'snapshots.png'\nfiles = system('ls snapshot_*.csv')\nplot for [f in files] f using 1:2 "
                 "with lines notitle\n";
        }
    } else if (interpreter == "python") {
        name = "plot.py";
        s << "import glob\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\nimport numpy as "
             "np\n\n";
        s << "def load(f):\n    return np.genfromtxt(f, delimiter=',', names=True)\n\n";
        if (kind == "front") {
            s << "d = load('front.csv')\nplt.scatter(d['x'], d['z'], c=d['t'], s=1)\nplt.xlabel('x')\nplt.ylabel('z')\n"
                 "plt.colorbar(label='t')\nplt.savefig('front.png', dpi=150)\n";
        } else if (kind == "convergence") {
            s << "d = load('convergence.csv')\nplt.loglog(d['norm'], d['error'], 'o-')\nplt.xlabel('partition "
                 "norm')\nplt.ylabel('sup error')\nplt.savefig('convergence.png', dpi=150)\n";
        } else if (kind == "compare") {
            s << "d = load('compare.csv')\nfor c in d.dtype.names[1:]:\n    plt.plot(d['x'], d[c], label=c)\n"
                 "plt.legend()\nplt.savefig('compare.png', dpi=150)\n";
        } else {
            s << "for f in sorted(glob.glob('snapshot_*.csv')):\n    d = load(f)\n    plt.plot(d['x'], d['u'], lw=0.8)\n"
                 "plt.xlabel('x')\nplt.ylabel('u')\nplt.savefig('snapshots.png', dpi=150)\n";
        }
    } else {
        throw Error(ErrorKind::config, "plot.interpreter must be 'python' or 'gnuplot'");
    }
    write_text(dir / name, s.str());
    return name;
}

}  // namespace cmhj::io
