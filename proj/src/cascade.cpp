#include "gmdcascade/cascade.hpp"

#include "gmdcascade/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

namespace gmdcascade {

namespace {

// Buses whose status variable ends below this are treated as de-energized.
constexpr double kDeadBusStatus = 1e-3;
// An island serving less than this is treated as dead.
constexpr double kDeadIslandMw = 1e-6;

using textio::fmt;

}  // namespace

const char* to_string(Termination t) {
    switch (t) {
        case Termination::horizon_elapsed: return "horizon_elapsed";
        case Termination::total_blackout: return "total_blackout";
        case Termination::solver_failure: return "solver_failure";
    }
    return "unknown";
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::trip: return "trip";
        case EventKind::generator_breaker: return "generator_breaker";
        case EventKind::island_removed: return "island_removed";
        case EventKind::bus_deenergized: return "bus_deenergized";
        case EventKind::reference_moved: return "reference_moved";
        case EventKind::blackout: return "blackout";
        case EventKind::solver_retry: return "solver_retry";
        case EventKind::solver_failure: return "solver_failure";
    }
    return "unknown";
}

RampBounds ramp_bounds(const Generator& g, double p_prev, double dt) {
    const double delta = std::max(0.0, g.ramp_rate) * dt / 60.0;
    const double lo = p_prev - delta;
    const double hi = p_prev + delta;
    if (hi < g.pmin) return {g.pmin, g.pmin};
    if (lo > g.pmax) return {g.pmax, g.pmax};
    return {std::max(lo, g.pmin), std::min(hi, g.pmax)};
}

void update_generator_ramp(CascadeState& state, const CascadeConfig& cfg) {
    state.gen_bounds.clear();
    for (const auto& g : state.net.generators) {
        if (!g.status) continue;
        auto it = state.gen_p.find(g.id);
        const double p_prev = it == state.gen_p.end() ? 0.0 : it->second;
        state.gen_bounds[g.id] = ramp_bounds(g, p_prev, cfg.dt);
    }
}

std::vector<int> update_generator_breakers(CascadeState& state) {
    std::vector<int> opened;
    for (auto& g : state.net.generators) {
        if (!g.status) continue;
        auto it = state.gen_p.find(g.id);
        const double out = it == state.gen_p.end() ? 0.0 : it->second;
        if (out < g.pmin) {
            g.status = false;
            state.gen_p[g.id] = 0.0;
            opened.push_back(g.id);
        }
    }
    return opened;
}

void update_load_breakers(CascadeState& state, const MlsSolution& previous) {
    for (const auto& l : state.net.loads) {
        auto sp = previous.load_p.find(l.id);
        auto sq = previous.load_q.find(l.id);
        const double p = sp == previous.load_p.end() ? 0.0 : sp->second;
        const double q = sq == previous.load_q.end() ? 0.0 : sq->second;
        auto& cur_p = state.load_p[l.id];
        auto& cur_q = state.load_q[l.id];
        // Served power is a fraction of the setpoint; keep the sign of q.
        cur_p = std::min(cur_p, p);
        cur_q = std::abs(q) <= std::abs(cur_q) ? q : cur_q;
    }
}

IslandSelection select_largest_island(NetworkCase& net) {
    const CaseIndex idx = net.index();
    std::map<int, int> parent;
    for (const auto& b : net.buses) {
        if (b.status) parent[b.id] = b.id;
    }
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& br : net.branches) {
        if (!branch_in_service(net, idx, br)) continue;
        const int a = find(br.from_bus), b = find(br.to_bus);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<int, std::vector<int>> groups;  // keyed by root, the lowest id
    for (const auto& [id, p] : parent) groups[find(id)].push_back(id);

    IslandSelection sel;
    const std::vector<int>* best = nullptr;
    for (const auto& [root, members] : groups) {
        if (best == nullptr || members.size() > best->size()) best = &members;
    }
    for (const auto& [root, members] : groups) {
        if (&members == best) {
            sel.kept = members;
            continue;
        }
        sel.removed.push_back(members);
        for (int b : members) net.buses[idx.bus.at(b)].status = false;
    }
    return sel;
}

double relay_loading(double s_mva, double rating_mva, double i_dc_phase, double i_rated) {
    const double ac = rating_mva > 0.0 ? s_mva / rating_mva : 0.0;
    const double dc = i_rated > 0.0 ? i_dc_phase / i_rated : 0.0;
    return std::hypot(ac, dc);
}

double rated_current(const NetworkCase& net, const Branch& br) {
    const double kv = std::max(net.bus(br.from_bus).base_kv, net.bus(br.to_bus).base_kv);
    if (kv <= 0.0 || br.thermal_rating <= 0.0) return 0.0;
    return br.thermal_rating * 1e3 / (std::sqrt(3.0) * kv);
}

std::vector<int> update_relays(CascadeState& state, const std::map<int, double>& loading, const CascadeConfig& cfg) {
    const CaseIndex idx = state.net.index();
    std::vector<int> tripped;
    for (const auto& [branch, value] : loading) {
        double pickup = cfg.pickup_ratio;
        double tau = cfg.trip_threshold;
        if (auto it = idx.relay.find(branch); it != idx.relay.end()) {
            const RelaySpec& spec = state.net.relays[it->second];
            if (!spec.enabled) continue;
            pickup = spec.pickup_ratio;
            tau = spec.trip_threshold;
        }
        RelayState& r = state.relays[branch];
        r.branch = branch;
        if (r.tripped) continue;
        r.integrator = std::max(0.0, r.integrator + cfg.dt * (value - pickup));
        if (r.integrator >= tau) {
            r.tripped = true;
            state.net.branches[idx.branch.at(branch)].status = false;
            tripped.push_back(branch);
        }
    }
    return tripped;
}

namespace {

class Runner {
public:
    Runner(const NetworkCase& net, const BranchVoltageSet& scenario, const CascadeConfig& cfg)
        : scenario_(scenario), cfg_(cfg) {
        st_.net = net;
        settings_ = cfg.solver;
        settings_.tol = cfg.solver_tol;
        trace_.dt = cfg.dt;
    }

    CascadeTrace run();

private:
    void event(EventKind kind, int element, std::string detail) {
        trace_.events.push_back({st_.iteration, st_.time, kind, element, std::move(detail)});
    }
    std::map<int, double> sample_voltages(int iteration) const;
    void select_island();
    bool island_is_dead() const;
    void blackout(const std::string& why);
    void ensure_reference();
    void deenergize(const MlsSolution& sol);
    void adopt(const MlsSolution& sol);
    bool solve(const MlsSnapshot& snap, MlsSolution& out);
    IterationRecord record(const std::map<int, double>& vdc, const MlsSolution* sol, int trips) const;

    const BranchVoltageSet& scenario_;
    const CascadeConfig& cfg_;
    conic::SolverSettings settings_;
    CascadeState st_;
    CascadeTrace trace_;
};

std::map<int, double> Runner::sample_voltages(int iteration) const {
    std::map<int, double> v;
    if (iteration == 0 || scenario_.steps() == 0) return v;
    std::size_t k = static_cast<std::size_t>(iteration);
    if (scenario_.dt > 0.0) k = static_cast<std::size_t>(std::floor(iteration * cfg_.dt / scenario_.dt + 1e-9));
    k = std::min(k, scenario_.steps() - 1);
    for (const auto& s : scenario_.series) v[s.branch] = s.v_dc[k];
    return v;
}

void Runner::select_island() {
    const IslandSelection sel = select_largest_island(st_.net);
    for (const auto& comp : sel.removed) {
        event(EventKind::island_removed, comp.front(), "buses=" + std::to_string(comp.size()));
    }
    st_.island = sel.kept;
}

bool Runner::island_is_dead() const {
    if (st_.island.empty()) return true;
    const CaseIndex idx = st_.net.index();
    auto on = [&](int bus) { return st_.net.buses[idx.bus.at(bus)].status; };
    const bool gen = std::any_of(st_.net.generators.begin(), st_.net.generators.end(),
                                 [&](const Generator& g) { return g.status && on(g.bus); });
    const bool load = std::any_of(st_.net.loads.begin(), st_.net.loads.end(), [&](const Load& l) {
        auto it = st_.load_p.find(l.id);
        return l.status && on(l.bus) && it != st_.load_p.end() && it->second > kDeadIslandMw;
    });
    return !(gen && load);
}

void Runner::blackout(const std::string& why) {
    for (auto& b : st_.net.buses) b.status = false;
    st_.island.clear();
    for (auto& [id, p] : st_.load_p) p = 0.0;
    for (auto& [id, q] : st_.load_q) q = 0.0;
    event(EventKind::blackout, 0, why);
}

void Runner::ensure_reference() {
    const CaseIndex idx = st_.net.index();
    for (int b : st_.island) {
        if (st_.net.buses[idx.bus.at(b)].is_reference) return;
    }
    const Generator* best = nullptr;
    for (const auto& g : st_.net.generators) {
        if (!g.status || !st_.net.buses[idx.bus.at(g.bus)].status) continue;
        if (best == nullptr || g.pmax > best->pmax || (g.pmax == best->pmax && g.bus < best->bus)) best = &g;
    }
    if (best == nullptr) return;
    for (auto& b : st_.net.buses) b.is_reference = b.id == best->bus;
    event(EventKind::reference_moved, best->bus, "generator=" + std::to_string(best->id));
}

void Runner::deenergize(const MlsSolution& sol) {
    const CaseIndex idx = st_.net.index();
    for (const auto& [bus, z] : sol.bus_status) {
        Bus& b = st_.net.buses[idx.bus.at(bus)];
        if (b.status && z < kDeadBusStatus) {
            b.status = false;
            event(EventKind::bus_deenergized, bus, "status=" + fmt(z));
        }
    }
}

// Previous dispatch for the next iteration's ramp windows and breakers.
void Runner::adopt(const MlsSolution& sol) {
    for (const auto& g : st_.net.generators) {
        auto it = sol.gen_p.find(g.id);
        st_.gen_p[g.id] = it == sol.gen_p.end() ? 0.0 : std::max(0.0, it->second);
    }
}

bool Runner::solve(const MlsSnapshot& snap, MlsSolution& out) {
    out = solve_mls(snap, settings_);
    if (out.status == conic::SolveStatus::optimal) return true;
    event(EventKind::solver_retry, 0, conic::to_string(out.status));
    conic::SolverSettings relaxed = settings_;
    relaxed.tol = 10.0 * settings_.tol;
    out = solve_mls(snap, relaxed);
    return out.status == conic::SolveStatus::optimal;
}

IterationRecord Runner::record(const std::map<int, double>& vdc, const MlsSolution* sol, int trips) const {
    IterationRecord r;
    r.iteration = st_.iteration;
    r.time = st_.time;
    const CaseIndex idx = st_.net.index();
    int lines = 0;
    for (const auto& br : st_.net.branches) {
        if (!branch_in_service(st_.net, idx, br)) continue;
        ++r.online_branches;
        if (br.is_transformer()) continue;
        auto it = vdc.find(br.id);
        const double v = it == vdc.end() ? 0.0 : std::abs(it->second);
        r.mean_abs_vdc += v;
        r.max_abs_vdc = std::max(r.max_abs_vdc, v);
        ++lines;
    }
    if (lines > 0) r.mean_abs_vdc /= lines;
    for (const auto& b : st_.net.buses) r.island_buses += b.status ? 1 : 0;
    if (sol != nullptr) {
        r.generation_mw = sol->generation_mw;
        r.served_mw = sol->served_mw;
    }
    r.trips = trips;
    return r;
}

CascadeTrace Runner::run() {
    if (!(cfg_.dt > 0.0)) throw CascadeError("dt must be positive");
    if (!(cfg_.horizon >= cfg_.dt)) throw CascadeError("horizon must be at least dt");
    const int iterations = static_cast<int>(std::floor(cfg_.horizon / cfg_.dt + 1e-9));
    {
        const CaseIndex idx = st_.net.index();
        for (const auto& s : scenario_.series) {
            if (!idx.branch.contains(s.branch)) {
                throw CascadeError("scenario references unknown branch " + std::to_string(s.branch));
            }
        }
        if (!scenario_.series.empty()) {
            const double needed = scenario_.dt > 0.0 ? cfg_.horizon / scenario_.dt : iterations;
            if (static_cast<double>(scenario_.steps()) + 1e-9 < std::floor(needed + 1e-9)) {
                throw CascadeError("scenario has " + std::to_string(scenario_.steps()) + " samples, the horizon needs " +
                                   std::to_string(static_cast<long>(std::floor(needed + 1e-9))));
            }
        }
        try {
            (void)build_gic_network(st_.net);
        } catch (const GicError& e) {
            throw CascadeError(std::string("dc network: ") + e.what());
        }
    }

    // Iteration 0: steady-state solve without induced voltage.
    select_island();
    ensure_reference();
    for (const auto& l : st_.net.loads) {
        st_.load_p[l.id] = l.status ? l.pd : 0.0;
        st_.load_q[l.id] = l.status ? l.qd : 0.0;
    }
    for (const auto& br : st_.net.branches) st_.relays[br.id] = {br.id, 0.0, false};
    MlsSolution sol;
    {
        MlsSnapshot snap;
        snap.net = st_.net;
        snap.mode = MlsMode::steady_state;
        try {
            if (!solve(snap, sol)) {
                throw CascadeError(std::string("initial load-shed problem: ") + conic::to_string(sol.status));
            }
        } catch (const MlsError& e) {
            throw CascadeError(std::string("initial load-shed problem: ") + e.what());
        }
    }
    const double initial_served = sol.served_mw;
    trace_.records.push_back(record({}, &sol, 0));
    deenergize(sol);
    adopt(sol);
    if (cfg_.verbosity > 0) std::clog << "iteration 0 served " << fmt(initial_served) << " MW\n";

    trace_.termination = Termination::horizon_elapsed;
    for (int k = 1; k <= iterations; ++k) {
        st_.iteration = k;
        st_.time = k * cfg_.dt;
        const std::map<int, double> vdc = sample_voltages(k);

        update_generator_ramp(st_, cfg_);
        for (int id : update_generator_breakers(st_)) {
            event(EventKind::generator_breaker, id, "below pmin");
            trace_.disabled_generators.push_back(id);
        }
        update_load_breakers(st_, sol);
        select_island();
        if (island_is_dead()) {
            blackout("no generation or load left in the largest island");
            trace_.records.push_back(record(vdc, nullptr, 0));
            trace_.termination = Termination::total_blackout;
            break;
        }
        ensure_reference();

        // Transformer losses from the GIC solve on the current topology.
        MlsSnapshot snap;
        snap.net = st_.net;
        snap.mode = MlsMode::cascading;
        const GicNetwork gnet = build_gic_network(st_.net);
        GicSolveOptions gopt;
        gopt.pin_floating = true;
        GicSolution gic = solve_gic(gnet, emf_vector(gnet, vdc), gopt);
        attach_losses(gic, st_.net);
        for (const auto& t : gic.transformers) snap.q_loss[t.branch] = t.q_loss;
        for (const auto& g : st_.net.generators) {
            if (!g.status) continue;
            snap.gen_p0[g.id] = st_.gen_p[g.id];
            snap.gen_bounds[g.id] = st_.gen_bounds[g.id];
        }
        snap.load_p0 = st_.load_p;
        snap.load_q0 = st_.load_q;

        bool ok = false;
        std::string why;
        try {
            ok = solve(snap, sol);
            if (!ok) why = conic::to_string(sol.status);
        } catch (const MlsError& e) {
            why = e.what();
        }
        if (!ok) {
            event(EventKind::solver_failure, 0, why);
            trace_.message = why;
            trace_.records.push_back(record(vdc, nullptr, 0));
            trace_.termination = Termination::solver_failure;
            break;
        }
        deenergize(sol);
        adopt(sol);

        // Relays see the post-solve flows and the dc current of this step.
        std::map<int, double> loading;
        const CaseIndex idx = st_.net.index();
        std::map<int, std::size_t> winding;
        for (const auto& tw : gnet.transformers) {
            if (tw.high) winding[tw.branch] = *tw.high;
            else if (tw.series) winding[tw.branch] = *tw.series;
        }
        for (const auto& br : st_.net.branches) {
            if (!branch_in_service(st_.net, idx, br) || br.thermal_rating <= 0.0) continue;
            auto f = sol.flows.find(br.id);
            const double s = f == sol.flows.end() ? 0.0 : f->second.apparent_mva();
            double i_dc = 0.0;
            if (auto it = gnet.line_branch.find(br.id); it != gnet.line_branch.end()) {
                i_dc = std::abs(gic.branch_currents[it->second]) / 3.0;
            } else if (auto w = winding.find(br.id); w != winding.end()) {
                i_dc = std::abs(gic.branch_currents[w->second]) / 3.0;
            }
            loading[br.id] = relay_loading(s, br.thermal_rating, i_dc, rated_current(st_.net, br));
        }
        const std::vector<int> trips = update_relays(st_, loading, cfg_);
        for (int id : trips) {
            event(EventKind::trip, id,
                  "loading=" + fmt(loading.at(id)) + " integrator=" + fmt(st_.relays.at(id).integrator));
            trace_.tripped_branches.push_back(id);
        }

        if (sol.served_mw <= kDeadIslandMw) blackout("no load served");
        trace_.records.push_back(record(vdc, &sol, static_cast<int>(trips.size())));
        if (cfg_.verbosity > 0) {
            const auto& r = trace_.records.back();
            std::clog << "iteration " << k << " served " << fmt(r.served_mw) << " MW, generation "
                      << fmt(r.generation_mw) << " MW, branches " << r.online_branches << ", trips " << r.trips
                      << '\n';
        }
        if (std::none_of(st_.net.buses.begin(), st_.net.buses.end(), [](const Bus& b) { return b.status; })) {
            trace_.termination = Termination::total_blackout;
            break;
        }
    }
    return trace_;
}

}  // namespace

CascadeTrace run_cascade(const NetworkCase& net, const BranchVoltageSet& scenario, const CascadeConfig& cfg) {
    Runner runner(net, scenario, cfg);
    return runner.run();
}

std::string format_trace(const CascadeTrace& trace) {
    std::ostringstream out;
    out << "# dt " << fmt(trace.dt) << "\n# termination " << to_string(trace.termination) << '\n';
    out << "iteration time_s mean_abs_vdc max_abs_vdc generation_mw online_branches served_mw island_buses trips\n";
    for (const auto& r : trace.records) {
        out << r.iteration << ' ' << fmt(r.time) << ' ' << fmt(r.mean_abs_vdc) << ' ' << fmt(r.max_abs_vdc) << ' '
            << fmt(r.generation_mw) << ' ' << r.online_branches << ' ' << fmt(r.served_mw) << ' ' << r.island_buses
            << ' ' << r.trips << '\n';
    }
    return out.str();
}

std::string format_events(const CascadeTrace& trace) {
    std::ostringstream out;
    out << "iteration time_s kind element detail\n";
    for (const auto& e : trace.events) {
        out << e.iteration << ' ' << fmt(e.time) << ' ' << to_string(e.kind) << ' ' << e.element << ' '
            << (e.detail.empty() ? "-" : e.detail) << '\n';
    }
    return out.str();
}

std::string format_summary(const CascadeTrace& trace) {
    nlohmann::ordered_json j;
    j["termination"] = to_string(trace.termination);
    if (!trace.message.empty()) j["message"] = trace.message;
    j["dt_s"] = trace.dt;
    j["iterations"] = trace.records.empty() ? 0 : trace.records.back().iteration;
    if (!trace.records.empty()) {
        const auto& first = trace.records.front();
        const auto& last = trace.records.back();
        j["initial_served_mw"] = first.served_mw;
        j["initial_generation_mw"] = first.generation_mw;
        j["final_served_mw"] = last.served_mw;
        j["final_generation_mw"] = last.generation_mw;
        j["final_online_branches"] = last.online_branches;
        j["final_energized_buses"] = last.island_buses;
    }
    j["tripped_branches"] = trace.tripped_branches;
    j["disabled_generators"] = trace.disabled_generators;
    j["events"] = trace.events.size();
    return j.dump(2) + '\n';
}

std::vector<IterationRecord> parse_trace(const std::string& text) {
    const textio::Table t = textio::parse_table(text, "trace");
    std::vector<IterationRecord> out;
    for (const auto& row : t.rows) {
        if (row.size() != 9) throw std::runtime_error("trace: expected 9 columns");
        IterationRecord r;
        r.iteration = static_cast<int>(row[0]);
        r.time = row[1];
        r.mean_abs_vdc = row[2];
        r.max_abs_vdc = row[3];
        r.generation_mw = row[4];
        r.online_branches = static_cast<int>(row[5]);
        r.served_mw = row[6];
        r.island_buses = static_cast<int>(row[7]);
        r.trips = static_cast<int>(row[8]);
        out.push_back(r);
    }
    return out;
}

std::vector<CascadeEvent> parse_events(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<CascadeEvent> out;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream ls(line);
        CascadeEvent e;
        std::string kind;
        if (!(ls >> e.iteration >> e.time >> kind >> e.element)) throw std::runtime_error("events: malformed line: " + line);
        std::getline(ls >> std::ws, e.detail);
        if (e.detail == "-") e.detail.clear();
        bool known = false;
        for (auto k : {EventKind::trip, EventKind::generator_breaker, EventKind::island_removed,
                       EventKind::bus_deenergized, EventKind::reference_moved, EventKind::blackout,
                       EventKind::solver_retry, EventKind::solver_failure}) {
            if (kind == to_string(k)) {
                e.kind = k;
                known = true;
            }
        }
        if (!known) throw std::runtime_error("events: unknown kind " + kind);
        out.push_back(std::move(e));
    }
    return out;
}

void write_cascade_outputs(const CascadeTrace& trace, const std::string& dir) {
    textio::ensure_directory(dir);
    const std::filesystem::path d(dir);
    textio::write_file((d / "trace.txt").string(), format_trace(trace));
    textio::write_file((d / "events.txt").string(), format_events(trace));
    textio::write_file((d / "summary.json").string(), format_summary(trace));
}

}  // namespace gmdcascade
