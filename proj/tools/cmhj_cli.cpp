// cmhj: batch runner for iterated minimax / viscosity experiments.
//
//   cmhj <subcommand> --config run.json [--output DIR] [--threads N] [--seed N]
//
// Exit codes: 0 ok, 2 validation error, 3 numerical error (including failed
// self-check diagnostics).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cmhj/contact_flow.hpp"
#include "cmhj/generating_family.hpp"
#include "cmhj/generating_function.hpp"
#include "cmhj/hamiltonian.hpp"
#include "cmhj/io.hpp"
#include "cmhj/iterated.hpp"
#include "cmhj/minimax.hpp"
#include "cmhj/nonsmooth.hpp"
#include "cmhj/viscosity.hpp"
#include "cmhj/wavefront.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cmhj;

namespace {

// ---------------------------------------------------------------------------
// config access with field paths in every diagnostic

struct Cfg {
    const json& j;
    std::string path;

    bool has(const std::string& k) const { return j.is_object() && j.contains(k); }
    Cfg sub(const std::string& k) const {
        static const json empty = json::object();
        if (!has(k)) return Cfg{empty, path + k + "."};
        if (!j.at(k).is_object()) fail(k, "must be an object");
        return Cfg{j.at(k), path + k + "."};
    }
    [[noreturn]] void fail(const std::string& k, const std::string& msg) const {
        throw Error(ErrorKind::config, "field '" + path + k + "': " + msg);
    }
    double num(const std::string& k, double d) const {
        if (!has(k)) return d;
        if (!j.at(k).is_number()) fail(k, "must be a number");
        return j.at(k).get<double>();
    }
    double num(const std::string& k) const {
        if (!has(k)) fail(k, "is required");
        return num(k, 0.0);
    }
    int integer(const std::string& k, int d) const {
        if (!has(k)) return d;
        if (!j.at(k).is_number_integer()) fail(k, "must be an integer");
        return j.at(k).get<int>();
    }
    bool boolean(const std::string& k, bool d) const {
        if (!has(k)) return d;
        if (!j.at(k).is_boolean()) fail(k, "must be true or false");
        return j.at(k).get<bool>();
    }
    std::string str(const std::string& k, const std::string& d) const {
        if (!has(k)) return d;
        if (!j.at(k).is_string()) fail(k, "must be a string");
        return j.at(k).get<std::string>();
    }
    std::vector<double> nums(const std::string& k, std::vector<double> d) const {
        if (!has(k)) return d;
        if (!j.at(k).is_array()) fail(k, "must be an array of numbers");
        std::vector<double> r;
        for (const auto& e : j.at(k)) {
            if (!e.is_number()) fail(k, "must be an array of numbers");
            r.push_back(e.get<double>());
        }
        return r;
    }
    ParamMap params(const std::string& k) const {
        ParamMap m;
        if (!has(k)) return m;
        if (!j.at(k).is_object()) fail(k, "must be an object of numbers");
        for (const auto& [name, v] : j.at(k).items()) {
            if (!v.is_number()) fail(k + "." + name, "must be a number");
            m[name] = v.get<double>();
        }
        return m;
    }
    void only(std::initializer_list<const char*> keys) const {
        if (!j.is_object()) return;
        for (const auto& [k, v] : j.items()) {
            bool ok = false;
            for (const char* a : keys) ok = ok || k == a;
            if (!ok) throw Error(ErrorKind::config, "unknown field '" + path + k + "'");
        }
    }
};

// ---------------------------------------------------------------------------
// initial-condition registry

struct Initial {
    std::function<double(double)> value;
    std::function<double(double)> slope;  // empty: not C^1
    GridFunction file;                    // "csv"
    bool from_file = false;
};

Initial make_initial(const Cfg& c) {
    const std::string key = c.str("key", "smoothed-neg-abs");
    const ParamMap p = c.params("params");
    Initial in;
    if (key == "zero") {
        in.value = [](double) { return 0.0; };
        in.slope = [](double) { return 0.0; };
    } else if (key == "smoothed-neg-abs") {
        const double d = param(p, "delta", 0.2);
        if (!(d > 0)) c.fail("params.delta", "must be positive");
        in.value = [d](double x) { return -std::sqrt(x * x + d * d); };
        in.slope = [d](double x) { return -x / std::sqrt(x * x + d * d); };
    } else if (key == "neg-abs") {
        in.value = [](double x) { return -std::abs(x); };
    } else if (key == "abs") {
        in.value = [](double x) { return std::abs(x); };
    } else if (key == "quadratic") {
        const double a = param(p, "a", 1.0);
        in.value = [a](double x) { return 0.5 * a * x * x; };
        in.slope = [a](double x) { return a * x; };
    } else if (key == "linear") {
        const double q = param(p, "p", 1.0);
        in.value = [q](double x) { return q * x; };
        in.slope = [q](double) { return q; };
    } else if (key == "sine") {
        const double A = param(p, "amplitude", 0.5), k = param(p, "k", 1.0);
        in.value = [A, k](double x) { return A * std::sin(k * x); };
        in.slope = [A, k](double x) { return A * k * std::cos(k * x); };
    } else if (key == "csv") {
        in.file = io::read_grid_function(c.str("path", ""));
        in.from_file = true;
        in.value = [g = in.file](double x) { return g(x); };
    } else {
        c.fail("key", "unknown initial condition '" + key +
                          "' (zero, smoothed-neg-abs, neg-abs, abs, quadratic, linear, sine, csv)");
    }
    return in;
}

// ---------------------------------------------------------------------------

struct Run {
    json raw;
    std::string ham_key;
    ParamMap ham_params;
    HamiltonianSpec<1> H;
    Initial init;
    GridFunction v;
    double T = 1.0;
    std::vector<double> norms;
    MinimaxConfig sel;
    int ref_div = 16;
    double ref_cfl = 0.45;
    bool ref_richardson = true;
    double k_lo = -2.0, k_hi = 2.0;
    double threshold = 0.0;
    std::string interpreter = "python";
    json wave_store = json::object();
    Cfg wave() const { return Cfg{wave_store, "wavefront."}; }
    fs::path out;
    unsigned seed = 1;
};

MinimaxConfig parse_selector(const Cfg& c, int threads) {
    c.only({"x0_window_pad", "y_bound", "grid_x0", "grid_y", "refine_levels", "route", "table_steps", "flow_steps",
            "cell_sub", "fan_dy", "snap", "carry_slopes", "selection"});
    MinimaxConfig m;
    m.x0_window_pad = c.num("x0_window_pad", m.x0_window_pad);
    m.y_bound = c.num("y_bound", m.y_bound);
    m.grid_x0 = c.integer("grid_x0", m.grid_x0);
    m.grid_y = c.integer("grid_y", m.grid_y);
    m.refine_levels = c.integer("refine_levels", m.refine_levels);
    const std::string route = c.str("route", "characteristic");
    if (route == "characteristic") m.route = FiberRoute::characteristic;
    else if (route == "generating_function") m.route = FiberRoute::generating_function;
    else c.fail("route", "must be 'characteristic' or 'generating_function'");
    const std::string sel = c.str("selection", "persistence");
    if (sel == "persistence") m.selection = Selection::persistence;
    else if (sel == "mountain_pass") m.selection = Selection::mountain_pass;
    else c.fail("selection", "must be 'persistence' or 'mountain_pass'");
    m.table_steps = c.integer("table_steps", m.table_steps);
    m.flow_steps = c.integer("flow_steps", m.flow_steps);
    m.cell_sub = c.integer("cell_sub", m.cell_sub);
    m.fan_dy = c.num("fan_dy", m.fan_dy);
    m.snap = c.boolean("snap", m.snap);
    m.carry_slopes = c.boolean("carry_slopes", m.carry_slopes);
    m.threads = threads;
    m.validate();
    return m;
}

Run load(const fs::path& config, const std::string& out_flag, int threads, unsigned seed) {
    std::ifstream f(config);
    if (!f) throw Error(ErrorKind::config, "cannot open config " + config.string());
    Run r;
    try {
        r.raw = json::parse(f);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::config, config.string() + ": " + e.what());
    }
    Cfg root{r.raw, ""};
    root.only({"hamiltonian", "initial", "domain", "time", "selector", "reference", "compare", "wavefront", "plot",
               "output_dir", "comment"});
    const Cfg h = root.sub("hamiltonian");
    h.only({"key", "params"});
    r.ham_key = h.str("key", "");
    if (r.ham_key.empty()) h.fail("key", "is required (" + [] {
        std::string s;
        for (const auto& k : hamiltonian_keys()) s += (s.empty() ? "" : ", ") + k;
        return s;
    }() + ")");
    r.ham_params = h.params("params");
    const auto keys = hamiltonian_keys();
    if (std::find(keys.begin(), keys.end(), r.ham_key) == keys.end())
        h.fail("key", "unknown hamiltonian '" + r.ham_key + "'");
    try {
        r.H = make_hamiltonian(r.ham_key, r.ham_params);
    } catch (const Error& e) {
        h.fail("params", e.what());
    }

    r.sel = parse_selector(root.sub("selector"), threads);

    const Cfg ini = root.sub("initial");
    ini.only({"key", "params", "path"});
    r.init = make_initial(ini);
    const Cfg d = root.sub("domain");
    d.only({"lo", "hi", "n"});
    if (r.init.from_file) {
        r.v = r.init.file;
    } else {
        const double lo = d.num("lo", -3.5), hi = d.num("hi", 3.5);
        const int n = d.integer("n", 351);
        if (!(hi > lo)) d.fail("hi", "must exceed domain.lo");
        if (n < 3) d.fail("n", "must be at least 3");
        const bool herm = r.sel.carry_slopes && r.init.slope;
        r.v = GridFunction::sample(r.init.value, lo, hi, n, -1.0, herm ? r.init.slope : nullptr);
    }
    const Cfg t = root.sub("time");
    t.only({"T", "partition_norms"});
    r.T = t.num("T", 1.0);
    if (!(r.T > 0)) t.fail("T", "must be positive");
    r.norms = t.nums("partition_norms", {r.T / 8});
    if (r.norms.empty()) t.fail("partition_norms", "must not be empty");
    for (double x : r.norms)
        if (!(x > 0)) t.fail("partition_norms", "entries must be positive");

    const Cfg ref = root.sub("reference");
    ref.only({"div", "cfl", "richardson"});
    r.ref_div = ref.integer("div", 16);
    r.ref_cfl = ref.num("cfl", 0.45);
    r.ref_richardson = ref.boolean("richardson", true);
    if (r.ref_div < 1) ref.fail("div", "must be >= 1");
    if (!(r.ref_cfl > 0) || r.ref_cfl > 0.45)
        ref.fail("cfl", "Courant number must lie in (0, 0.45] (CFL condition dt <= 0.9 dx / (2 ||d_y H||))");

    const Cfg cmp = root.sub("compare");
    cmp.only({"K", "threshold"});
    const auto K = cmp.nums("K", {-2.0, 2.0});
    if (K.size() != 2 || !(K[1] > K[0])) cmp.fail("K", "must be [lo, hi] with lo < hi");
    r.k_lo = K[0];
    r.k_hi = K[1];
    r.threshold = cmp.num("threshold", 0.0);

    r.wave_store = root.has("wavefront") ? r.raw.at("wavefront") : json::object();
    r.wave().only({"times", "x0_lo", "x0_hi", "n_x0", "fold_t_max"});

    const Cfg pl = root.sub("plot");
    pl.only({"interpreter"});
    r.interpreter = pl.str("interpreter", "python");
    if (r.interpreter != "python" && r.interpreter != "gnuplot") pl.fail("interpreter", "must be 'python' or 'gnuplot'");

    r.out = out_flag.empty() ? fs::path(root.str("output_dir", "cmhj_out")) : fs::path(out_flag);
    r.seed = seed;
    return r;
}

std::vector<double> time_grid(const Partition& p) { return p.times; }

json selector_json(const MinimaxConfig& m) {
    return json{{"x0_window_pad", m.x0_window_pad}, {"y_bound", m.y_bound}, {"grid_x0", m.grid_x0},
                {"grid_y", m.grid_y}, {"refine_levels", m.refine_levels},
                {"route", m.route == FiberRoute::characteristic ? "characteristic" : "generating_function"},
                {"table_steps", m.table_steps}, {"flow_steps", m.flow_steps}, {"cell_sub", m.cell_sub},
                {"fan_dy", m.fan_dy}, {"snap", m.snap}, {"carry_slopes", m.carry_slopes},
                {"selection", m.selection == Selection::persistence ? "persistence" : "mountain_pass"}};
}

json hamiltonian_json(const Run& r) {
    json p = json::object();
    for (const auto& [k, v] : r.ham_params) p[k] = v;
    return json{{"key", r.ham_key},       {"params", p},           {"norm_H", r.H.norm_H},
                {"c_H", r.H.c_H},         {"norm_dxH", r.H.norm_dxH}, {"norm_dyH", r.H.norm_dyH},
                {"norm_dzH", r.H.norm_dzH}, {"delta_H", delta_H(r.H)}};
}

// ---------------------------------------------------------------------------
// subcommands

int solve_minimax(const Run& r) {
    const Partition zeta = Partition::with_norm(r.T, r.norms.front());
    const SolutionTrace tr = iterated_minimax(r.H, r.v, zeta, r.sel);
    bool lip_ok = true;
    for (const auto& c : tr.certificates) lip_ok = lip_ok && c.lip_measured <= 1.05 * c.lip_bound;
    io::json extra;
    extra["hamiltonian"] = hamiltonian_json(r);
    extra["selector"] = selector_json(r.sel);
    extra["lipschitz_certificates_hold"] = lip_ok;
    io::write_trace(r.out, tr, extra);
    const std::string plot = io::write_plot_script(r.out, "snapshots", r.interpreter);
    io::write_run_readme(r.out, "solve-minimax", "cmhj solve-minimax",
                         {{"snapshot_NNN.csv", "x,u", "iterated minimax solution at the partition time of entry NNN"},
                          {"manifest.json", "-", "partition, per-step Lipschitz certificates, grid headers"},
                          {plot, "-", "plotting script (not data)"}});
    std::printf("solve-minimax: %d steps, |zeta| = %.6g, output %s\n", zeta.steps(), zeta.norm(), r.out.c_str());
    return 0;
}

int solve_viscosity(const Run& r) {
    const Partition zeta = Partition::with_norm(r.T, r.norms.front());
    LaxFriedrichsReport rep;
    const double dx = r.v.dx() / r.ref_div;
    const TimeSeries ts = lax_friedrichs_solve(r.H, r.v, r.T, dx, r.ref_cfl, time_grid(zeta), &rep);
    // frames resampled onto the configured grid
    TimeSeries coarse;
    coarse.times = ts.times;
    for (const auto& f : ts.frames) coarse.frames.push_back(f.resample(r.v.lo, r.v.hi, r.v.n));
    io::write_time_series(r.out, coarse, "viscosity");
    std::vector<io::FileDoc> docs{
        {"viscosity_NNN.csv", "x,u", "Lax-Friedrichs solution (computed on a grid refined by reference.div)"},
        {"viscosity_manifest.json", "-", "frame times"}};
    if (auto prof = discount_profile(r.ham_key, r.ham_params)) {
        HopfLaxDiscount hl(*prof);
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < r.v.n; ++i) {
            const double x = r.v.node(i);
            rows.push_back({x, hl(r.init.value, r.T, x), ts.frames.back()(x)});
        }
        io::write_table(r.out / "hopf_lax.csv", {"x", "hopf_lax", "viscosity"}, rows);
        docs.push_back({"hopf_lax.csv", "x,hopf_lax,viscosity", "discounted Hopf-Lax formula and the scheme at T"});
    }
    io::write_json(r.out / "run.json", json{{"hamiltonian", hamiltonian_json(r)},
                                             {"dx", dx},
                                             {"dt", rep.dt},
                                             {"steps", rep.steps},
                                             {"courant", rep.courant}});
    docs.push_back({"run.json", "-", "scheme parameters"});
    const std::string plot = io::write_plot_script(r.out, "snapshots", r.interpreter);
    docs.push_back({plot, "-", "plotting script (not data)"});
    io::write_run_readme(r.out, "solve-viscosity", "cmhj solve-viscosity", docs);
    std::printf("solve-viscosity: %d LF steps, dt = %.3g, output %s\n", rep.steps, rep.dt, r.out.c_str());
    return 0;
}

int wavefront(const Run& r) {
    if (!r.init.slope) throw Error(ErrorKind::config, "field 'initial.key': wavefront needs a C^1 initial condition");
    const InitialJet jet{r.init.value, r.init.slope};
    const auto ts = r.wave().nums("times", {0.25 * r.T, 0.5 * r.T, 0.75 * r.T, r.T});
    const double a = r.wave().num("x0_lo", r.v.lo), b = r.wave().num("x0_hi", r.v.hi);
    const int n = r.wave().integer("n_x0", 401);
    if (n < 3 || !(b > a)) r.wave().fail("n_x0", "need n_x0 >= 3 and x0_hi > x0_lo");
    std::vector<double> x0(n);
    for (int i = 0; i < n; ++i) x0[i] = a + (b - a) * i / (n - 1);
    const auto front = propagate_front(r.H, jet, ts, x0, r.sel.flow_steps);
    io::write_front(r.out / "front.csv", front);
    const double tf = first_fold_time(r.H, jet, x0, r.wave().num("fold_t_max", r.T), 1e-3, r.sel.flow_steps);
    io::write_json(r.out / "fold.json", json{{"first_fold_time", std::isfinite(tf) ? json(tf) : json(nullptr)},
                                              {"bracket", 1e-3},
                                              {"hamiltonian", hamiltonian_json(r)}});
    const std::string plot = io::write_plot_script(r.out, "front", r.interpreter);
    io::write_run_readme(
        r.out, "wavefront", "cmhj wavefront",
        {{"front.csv", "t,x0,x,y,z,fold_flag",
          "flow image (x,y,z) at time t of the seed jet at x0; fold_flag 0 regular, 1 reversed (dx/dx0 < 0), 2 "
          "degenerate"},
         {"fold.json", "-", "first fold time (null when none before fold_t_max), bracket width"},
         {plot, "-", "plotting script (not data)"}});
    std::printf("wavefront: %zu samples, first fold %s\n", front.size(),
                std::isfinite(tf) ? std::to_string(tf).c_str() : "none");
    return 0;
}

int compare(const Run& r) {
    const Partition zeta = Partition::with_norm(r.T, r.norms.front());
    const SolutionTrace tr = iterated_minimax(r.H, r.v, zeta, r.sel);
    const auto ref = viscosity_reference(r.H, r.v, r.T, r.ref_div, r.ref_cfl, zeta.times, r.ref_richardson);
    std::optional<HopfLaxDiscount> hl;
    if (auto prof = discount_profile(r.ham_key, r.ham_params)) hl.emplace(*prof);
    std::vector<std::vector<double>> rows;
    double e_ref = 0.0, e_hl = 0.0, e_cross = 0.0;
    for (std::size_t k = 0; k < zeta.times.size(); ++k) {
        const double t = zeta.times[k];
        const GridFunction& u = tr.snapshots[k];
        for (int i = 0; i < u.n; ++i) {
            const double x = u.node(i);
            const double rv = ref(t, x);
            const double hv = hl ? (*hl)(r.init.value, t, x) : NAN;
            if (x >= r.k_lo - 1e-12 && x <= r.k_hi + 1e-12) {
                e_ref = std::max(e_ref, std::abs(u.values[i] - rv));
                if (hl) {
                    e_hl = std::max(e_hl, std::abs(u.values[i] - hv));
                    e_cross = std::max(e_cross, std::abs(rv - hv));
                }
            }
            if (k + 1 == zeta.times.size()) rows.push_back(hl ? std::vector<double>{x, u.values[i], rv, hv}
                                                              : std::vector<double>{x, u.values[i], rv});
        }
    }
    if (hl) io::write_table(r.out / "compare.csv", {"x", "minimax", "viscosity", "hopf_lax"}, rows);
    else io::write_table(r.out / "compare.csv", {"x", "minimax", "viscosity"}, rows);
    const double thr = r.threshold > 0 ? r.threshold : 3.0 * ref.spread(r.k_lo, r.k_hi) + 3.0 * r.v.dx() * r.v.dx();
    json res{{"partition_norm", zeta.norm()},
             {"K", {r.k_lo, r.k_hi}},
             {"error_vs_viscosity", e_ref},
             {"threshold", thr},
             {"pass", e_ref <= thr},
             {"reference_spread", ref.spread(r.k_lo, r.k_hi)}};
    if (hl) {
        res["error_vs_hopf_lax"] = e_hl;
        res["viscosity_vs_hopf_lax"] = e_cross;
        res["pass"] = e_ref <= thr && e_hl <= thr;
    }
    io::write_json(r.out / "compare.json", res);
    const std::string plot = io::write_plot_script(r.out, "compare", r.interpreter);
    io::write_run_readme(r.out, "compare", "cmhj compare",
                         {{"compare.csv", hl ? "x,minimax,viscosity,hopf_lax" : "x,minimax,viscosity",
                           "solutions at T on the configured grid"},
                          {"compare.json", "-", "sup errors over the partition times x K, threshold, verdict"},
                          {plot, "-", "plotting script (not data)"}});
    std::printf("compare: sup error %.3g (threshold %.3g) -> %s\n", e_ref, thr,
                res["pass"].get<bool>() ? "pass" : "FAIL");
    return 0;
}

int convergence_study_cmd(const Run& r) {
    std::vector<Partition> parts;
    for (double h : r.norms) parts.push_back(Partition::with_norm(r.T, h));
    // common sample times: the finest partition
    std::vector<double> times = parts.front().times;
    for (const auto& p : parts)
        if (p.steps() > static_cast<int>(times.size()) - 1) times = p.times;
    const auto ref = viscosity_reference(r.H, r.v, r.T, r.ref_div, r.ref_cfl, times, r.ref_richardson);
    const double thr = r.threshold > 0 ? r.threshold : 1.0;
    const ConvergenceTable tab = convergence_study(r.H, r.v, parts, ref, r.k_lo, r.k_hi, times, r.sel, thr);
    std::vector<std::vector<double>> rows;
    for (const auto& row : tab.rows)
        rows.push_back({row.norm, static_cast<double>(row.steps), row.error, row.err_t, row.err_x, row.final_error});
    io::write_table(r.out / "convergence.csv", {"norm", "steps", "error", "err_t", "err_x", "final_error"}, rows);
    io::write_json(r.out / "convergence.json", json{{"strictly_decreasing", tab.strictly_decreasing},
                                                    {"ratio_first_last", tab.ratio_first_last},
                                                    {"threshold", thr},
                                                    {"verdict", tab.verdict},
                                                    {"reference_spread", ref.spread(r.k_lo, r.k_hi)},
                                                    {"K", {r.k_lo, r.k_hi}},
                                                    {"sample_times", times},
                                                    {"hamiltonian", hamiltonian_json(r)}});
    const std::string plot = io::write_plot_script(r.out, "convergence", r.interpreter);
    io::write_run_readme(
        r.out, "convergence-study", "cmhj convergence-study",
        {{"convergence.csv", "norm,steps,error,err_t,err_x,final_error",
          "per partition: sup error over sample times x K, where it occurs, and the error at T"},
         {"convergence.json", "-", "trend verdict, first/last ratio, reference spread"},
         {plot, "-", "plotting script (not data)"}});
    for (const auto& row : tab.rows) std::printf("  |zeta| = %-8.4g error %.4e\n", row.norm, row.error);
    std::printf("convergence-study: strictly decreasing %s, ratio %.2f\n", tab.strictly_decreasing ? "yes" : "no",
                tab.ratio_first_last);
    return 0;
}

int self_check(const Run& r) {
    json out = json::array();
    bool all = true;
    auto record = [&](const CheckReport& c) {
        all = all && c.pass;
        out.push_back(json{{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass},
                           {"samples", c.samples}, {"detail", c.detail}});
        std::printf("  %-40s %s  (%.3g vs %.3g)\n", c.name.c_str(), c.pass ? "pass" : "FAIL", c.value, c.threshold);
    };
    std::mt19937_64 rng(r.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double gap = std::min(0.5 * delta_H(r.H), r.T);
    record(flow_contraction_check(r.H, TimeInterval{0.0, gap}, 20, r.seed));
    {
        CheckReport c{"phi_derivative_identities", 0.0, 1e-4, true, 0, "max residual over time, s and gradient checks"};
        for (int k = 0; k < 5; ++k) {
            GenFuncQuery<1> q{{U(rng)}, {U(rng)}, U(rng), TimeInterval{0.0, gap * (0.5 + 0.4 * std::abs(U(rng)))}};
            for (const auto& rep : {phi_time_derivative_check(r.H, q), phi_s_derivative_check(r.H, q),
                                    phi_gradient_check(r.H, q)}) {
                c.value = std::max(c.value, rep.value);
                ++c.samples;
            }
        }
        c.pass = c.value <= c.threshold;
        record(c);
    }
    {
        CheckReport c{"clarke_mean_value", 0.0, 0.0, true, 0, "failed pairs"};
        for (int k = 0; k < 20; ++k) {
            const double a = r.v.lo + (r.v.hi - r.v.lo) * (0.5 + 0.5 * U(rng)) * 0.9;
            const double b = r.v.lo + (r.v.hi - r.v.lo) * (0.5 + 0.5 * U(rng)) * 0.9;
            if (a == b) continue;
            const auto m = mean_value_check(r.v, std::min(a, b), std::max(a, b));
            if (!m.pass) c.value += 1.0;
            ++c.samples;
        }
        c.pass = c.value == 0.0;
        record(c);
    }
    {
        // monotonicity on a shifted pair v <= v + c(x) with c >= 0
        const TimeInterval iv{0.0, std::min(0.25, r.T)};
        std::vector<double> w(r.v.values);
        for (int i = 0; i < r.v.n; ++i) w[i] += 0.1 + 0.05 * std::sin(r.v.node(i));
        const GridFunction W = r.v.with_values(w, -1.0, r.v.slopes.empty() ? std::vector<double>{} : [&] {
            std::vector<double> s(r.v.slopes);
            for (int i = 0; i < r.v.n; ++i) s[i] += 0.05 * std::cos(r.v.node(i));
            return s;
        }());
        OperatorReport ra, rb;
        const GridFunction Rv = minimax_operator(r.H, iv, r.v, r.sel, &ra);
        const GridFunction Rw = minimax_operator(r.H, iv, W, r.sel, &rb);
        double worst = 0.0;
        for (int i = 0; i < Rv.n; ++i) worst = std::max(worst, Rv.values[i] - Rw.values[i]);
        record(CheckReport{"monotonicity", worst, 2.0 * std::max(ra.grid_tol, rb.grid_tol),
                           worst <= 2.0 * std::max(ra.grid_tol, rb.grid_tol), static_cast<std::size_t>(Rv.n), "max (R v - R w)"});
        record(CheckReport{"space_lipschitz", Rv.lip, 1.05 * ra.lip_bound + 1e-9, Rv.lip <= 1.05 * ra.lip_bound + 1e-9,
                           static_cast<std::size_t>(Rv.n), "output Lipschitz constant vs certified bound"});
    }
    {
        const TimeInterval iv{0.0, std::min(0.5 * delta_H(r.H), 0.1)};
        const double x = 0.5 * (r.k_lo + r.k_hi);
        const auto pi = partition_independence_check(r.H, iv, r.v, x, {1, 2, 3}, r.sel);
        record(CheckReport{"partition_independence", pi.spread, pi.tolerance, pi.pass, 3, "spread of 1/2/3-step values"});
    }
    {
        const TimeInterval iv{0.0, std::min(0.25, r.T)};
        CheckReport c{"gradient_inclusion", 0.0, 0.0, true, 0, "violations at stable points"};
        for (int k = 0; k < 10; ++k) {
            const double x = r.k_lo + (r.k_hi - r.k_lo) * (0.5 + 0.5 * U(rng));
            const auto g = gradient_inclusion_check(r.H, iv, r.v, x, r.sel);
            if (!g.stable) continue;
            ++c.samples;
            if (!g.pass) c.value += 1.0;
        }
        c.pass = c.value == 0.0;
        record(c);
    }
    io::write_json(r.out / "self_check.json", json{{"checks", out}, {"all_pass", all}, {"seed", r.seed}});
    io::write_run_readme(r.out, "self-check", "cmhj self-check",
                         {{"self_check.json", "-", "one entry per diagnostic: value, threshold, verdict"}});
    std::printf("self-check: %s\n", all ? "all pass" : "FAILURES");
    return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cmhj: minimax and viscosity solutions of contact Hamilton-Jacobi equations"};
    app.require_subcommand(1);
    std::string config, output;
    int threads = 1;
    unsigned seed = 1;
    std::map<std::string, std::function<int(const Run&)>> cmds{
        {"solve-minimax", solve_minimax},   {"solve-viscosity", solve_viscosity},
        {"wavefront", wavefront},           {"compare", compare},
        {"convergence-study", convergence_study_cmd}, {"self-check", self_check}};
    const std::map<std::string, std::string> help{
        {"solve-minimax", "iterated minimax solution over a partition"},
        {"solve-viscosity", "Lax-Friedrichs (and discounted Hopf-Lax) reference"},
        {"wavefront", "characteristic front and first fold time"},
        {"compare", "minimax against the viscosity references"},
        {"convergence-study", "sup errors across partition norms"},
        {"self-check", "runs the diagnostic checks"}};
    for (const auto& [name, fn] : cmds) {
        auto* sc = app.add_subcommand(name, help.at(name));
        sc->add_option("--config", config, "JSON configuration")->required();
        sc->add_option("--output", output, "output directory (overrides output_dir)");
        sc->add_option("--threads", threads, "worker threads for node sweeps")->check(CLI::Range(1, 1024));
        sc->add_option("--seed", seed, "seed for randomized diagnostics");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    try {
        const Run r = load(config, output, threads, seed);
        fs::create_directories(r.out);
        return cmds.at(name)(r);
    } catch (const Error& e) {
        std::fprintf(stderr, "cmhj %s: %s\n", name.c_str(), e.what());
        return is_validation(e.kind()) ? 2 : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "cmhj %s: %s\n", name.c_str(), e.what());
        return 3;
    }
}
