// gmdcascade command-line driver: run | couple | synth | validate.

#include "gmdcascade/cascade.hpp"
#include "gmdcascade/coupling.hpp"
#include "gmdcascade/geofield.hpp"
#include "gmdcascade/netmodel.hpp"
#include "gmdcascade/synth.hpp"
#include "gmdcascade/textio.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

namespace fs = std::filesystem;
using namespace gmdcascade;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kSolverFailure = 2;

struct ScenarioFlags {
    std::string field_dir;
    std::string branch_voltages;
    std::string b_series;
    std::string tf_dir;

    [[nodiscard]] int sources() const {
        return static_cast<int>(!field_dir.empty()) + static_cast<int>(!branch_voltages.empty()) +
               static_cast<int>(!b_series.empty());
    }
};

struct Options {
    std::string case_path;
    std::string config_path;
    std::string out;
    ScenarioFlags scenario;
    std::optional<double> dt, horizon, relay_tau, solver_tol;
    std::uint64_t seed = 1;
    int buses = 169;
    bool no_gsu = false;
    bool verbose = false;
};

void add_field_flags(CLI::App& cmd, Options& o) {
    cmd.add_option("--field-dir", o.scenario.field_dir, "Geoelectric field grid directory");
    cmd.add_option("--b-series", o.scenario.b_series, "Magnetic series file (uniform) or magnetic grid directory");
    cmd.add_option("--tf-dir", o.scenario.tf_dir, "Transfer-function site directory (with --b-series)");
}

// Field grid from a geoelectric grid or from magnetic data and transfer functions.
FieldGrid field_grid(const ScenarioFlags& s, const std::vector<LineGeometry>& lines) {
    if (!s.field_dir.empty()) return read_field_grid(s.field_dir);
    if (s.tf_dir.empty()) throw std::invalid_argument("--b-series needs --tf-dir");
    const std::vector<TransferFunction> sites = read_tf_sites(s.tf_dir);
    std::vector<MagneticGridPoint> points;
    if (fs::is_directory(s.b_series)) {
        points = read_magnetic_grid(s.b_series);
    } else {
        const MagneticSeries b = read_magnetic_series(s.b_series);
        for (const auto& l : lines) points.push_back({l.mid_lat(), l.mid_lon(), b});
        if (points.empty()) points.push_back({0.0, 0.0, b});
    }
    return compute_field_grid(points, sites);
}

BranchVoltageSet scenario_for(const Options& o, const NetworkCase& net) {
    if (o.scenario.sources() != 1) {
        throw std::invalid_argument("give exactly one of --field-dir, --branch-voltages, --b-series");
    }
    if (!o.scenario.branch_voltages.empty()) return read_branch_voltages(o.scenario.branch_voltages);
    const std::vector<LineGeometry> lines = line_geometries(net);
    return couple_field_grid(lines, field_grid(o.scenario, lines));
}

CascadeConfig config_for(const Options& o) {
    CascadeConfig cfg;
    if (!o.config_path.empty()) {
        const auto j = nlohmann::json::parse(textio::read_file(o.config_path));
        cfg.dt = j.value("dt", cfg.dt);
        cfg.horizon = j.value("horizon", cfg.horizon);
        cfg.trip_threshold = j.value("relay_tau", cfg.trip_threshold);
        cfg.pickup_ratio = j.value("pickup_ratio", cfg.pickup_ratio);
        cfg.solver_tol = j.value("solver_tol", cfg.solver_tol);
    }
    if (o.dt) cfg.dt = *o.dt;
    if (o.horizon) cfg.horizon = *o.horizon;
    if (o.relay_tau) cfg.trip_threshold = *o.relay_tau;
    if (o.solver_tol) cfg.solver_tol = *o.solver_tol;
    if (o.verbose) cfg.verbosity = 1;
    return cfg;
}

int cmd_run(const Options& o) {
    NetworkCase net = load_case(o.case_path);
    validate(net);
    if (!o.no_gsu) net = attach_gsu_transformers(net);
    const BranchVoltageSet scenario = scenario_for(o, net);
    const CascadeTrace trace = run_cascade(net, scenario, config_for(o));
    write_cascade_outputs(trace, o.out);
    std::cout << "termination " << to_string(trace.termination) << ", iterations "
              << (trace.records.empty() ? 0 : trace.records.back().iteration) << ", final served "
              << textio::fmt(trace.records.empty() ? 0.0 : trace.records.back().served_mw) << " MW, trips "
              << trace.tripped_branches.size() << '\n';
    if (trace.termination == Termination::solver_failure) {
        std::cerr << "error: solver failure: " << trace.message << '\n';
        return kSolverFailure;
    }
    return kOk;
}

int cmd_couple(const Options& o) {
    const NetworkCase net = load_case(o.case_path);
    validate(net);
    if (!o.scenario.branch_voltages.empty()) throw std::invalid_argument("couple takes a field source");
    const BranchVoltageSet set = scenario_for(o, net);
    if (o.out.empty()) {
        std::cout << format_branch_voltages(set);
    } else {
        write_branch_voltages(set, o.out);
    }
    return kOk;
}

int cmd_synth(const Options& o) {
    SynthOptions s;
    s.buses = o.buses;
    s.seed = o.seed;
    const std::string text = serialize_case(synthesize_case(s));
    if (o.out.empty()) {
        std::cout << text;
    } else {
        textio::write_file(o.out, text);
    }
    return kOk;
}

int cmd_validate(const Options& o) {
    const NetworkCase net = load_case(o.case_path);
    validate(net);
    std::cout << "ok: " << net.buses.size() << " buses, " << net.branches.size() << " branches, "
              << net.generators.size() << " generators, " << net.loads.size() << " loads, "
              << net.substations.size() << " substations; load " << textio::fmt(total_load_mw(net))
              << " MW, capacity " << textio::fmt(total_pmax_mw(net)) << " MW\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GMD-induced cascading failure simulator"};
    app.require_subcommand(1);
    Options o;

    auto* run = app.add_subcommand("run", "Simulate a cascade and write trace.txt, events.txt, summary.json");
    run->add_option("--case", o.case_path, "Case file")->required();
    add_field_flags(*run, o);
    run->add_option("--branch-voltages", o.scenario.branch_voltages, "Per-branch coupled voltage file");
    run->add_option("--config", o.config_path, "JSON settings; flags take precedence");
    run->add_option("--dt", o.dt, "Seconds per iteration")->check(CLI::PositiveNumber);
    run->add_option("--horizon", o.horizon, "Simulated seconds")->check(CLI::PositiveNumber);
    run->add_option("--relay-tau", o.relay_tau, "Relay trip threshold, seconds")->check(CLI::PositiveNumber);
    run->add_option("--solver-tol", o.solver_tol, "Conic solver tolerance")->check(CLI::PositiveNumber);
    run->add_option("--out", o.out, "Output directory")->required();
    run->add_flag("--no-gsu", o.no_gsu, "Do not add step-up transformers for bare generators");
    run->add_flag("-v,--verbose", o.verbose, "Progress on stderr");

    auto* couple = app.add_subcommand("couple", "Write per-branch coupled dc voltages");
    couple->add_option("--case", o.case_path, "Case file")->required();
    add_field_flags(*couple, o);
    couple->add_option("--out", o.out, "Output file (stdout if omitted)");

    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic case");
    synth->add_option("--buses", o.buses, "Bus count")->capture_default_str();
    synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    synth->add_option("--out", o.out, "Output case file (stdout if omitted)");

    auto* check = app.add_subcommand("validate", "Check a case file");
    check->add_option("--case", o.case_path, "Case file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*run) return cmd_run(o);
        if (*couple) return cmd_couple(o);
        if (*synth) return cmd_synth(o);
        return cmd_validate(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
}
