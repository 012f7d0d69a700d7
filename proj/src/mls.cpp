#include "gmdcascade/mls.hpp"

#include "gmdcascade/textio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gmdcascade {

using conic::LinearExpr;

namespace {

// Tie-breaking objective weights, in MW-equivalents: a small generation cost
// keeps the relaxation tight (minimum losses) and a small reward per
// energized bus stops buses from being switched off for no reason.
constexpr double kGenerationWeight = 1e-3;
constexpr double kBusWeight = 1e-3;

struct Active {
    std::vector<const Bus*> buses;
    std::vector<const Branch*> branches;
    std::vector<const Generator*> gens;
    std::vector<const Load*> loads;
};

Active active_elements(const NetworkCase& net, const CaseIndex& idx) {
    Active a;
    for (const auto& b : net.buses) {
        if (b.status) a.buses.push_back(&b);
    }
    for (const auto& br : net.branches) {
        if (branch_in_service(net, idx, br)) a.branches.push_back(&br);
    }
    auto bus_on = [&](int id) { return net.buses[idx.bus.at(id)].status; };
    for (const auto& g : net.generators) {
        if (g.status && bus_on(g.bus)) a.gens.push_back(&g);
    }
    for (const auto& l : net.loads) {
        if (l.status && bus_on(l.bus)) a.loads.push_back(&l);
    }
    return a;
}

// Connected components of the active buses, each sorted, ordered by lowest bus id.
std::vector<std::vector<int>> components(const Active& a) {
    std::map<int, int> parent;
    for (const Bus* b : a.buses) parent[b->id] = b->id;
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const Branch* br : a.branches) {
        const int r1 = find(br->from_bus), r2 = find(br->to_bus);
        if (r1 != r2) parent[std::max(r1, r2)] = std::min(r1, r2);
    }
    std::map<int, std::vector<int>> groups;
    for (const Bus* b : a.buses) groups[find(b->id)].push_back(b->id);
    std::vector<std::vector<int>> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    return out;
}

MlsProgram build(const MlsSnapshot& snap, MlsMode mode) {
    const NetworkCase& net = snap.net;
    const CaseIndex idx = net.index();
    const Active act = active_elements(net, idx);
    const double base = net.base_mva;
    for (const auto& [id, q] : snap.q_loss) {
        if (!(q >= 0.0)) throw MlsError("negative reactive loss on branch " + std::to_string(id));
    }

    MlsProgram m;
    m.mode = mode;
    m.base_mva = base;
    auto& p = m.program;

    // Islands and their reference buses.
    std::map<int, std::size_t> island_of;
    for (auto& members : components(act)) {
        MlsProgram::Island isl;
        const auto ref = std::find_if(members.begin(), members.end(),
                                      [&](int b) { return net.buses[idx.bus.at(b)].is_reference; });
        if (ref == members.end()) {
            throw MlsError("no reference bus in the component containing bus " + std::to_string(members.front()));
        }
        isl.reference_bus = *ref;
        for (int b : members) island_of[b] = m.islands.size();
        isl.buses = std::move(members);
        m.islands.push_back(std::move(isl));
    }
    std::vector<bool> has_gen(m.islands.size(), false);
    for (const Generator* g : act.gens) has_gen[island_of.at(g->bus)] = true;
    for (std::size_t k = 0; k < m.islands.size(); ++k) {
        if (!has_gen[k]) {
            throw MlsError("component containing bus " + std::to_string(m.islands[k].buses.front()) +
                           " has no in-service generation");
        }
    }

    // Buses: W_ii and status z_i with z_i vmin^2 <= W_ii <= z_i vmax^2.
    for (const Bus* b : act.buses) {
        const int w = p.add_variable(0.0, conic::kInf, "w_" + std::to_string(b->id));
        const int z = p.add_variable(0.0, 1.0, "z_bus_" + std::to_string(b->id));
        m.bus_w[b->id] = w;
        m.bus_z[b->id] = z;
        p.add_inequality(LinearExpr({{z, b->vmin * b->vmin}, {w, -1.0}}), 0.0);
        p.add_inequality(LinearExpr({{w, 1.0}, {z, -b->vmax * b->vmax}}), 0.0);
        p.set_objective_coefficient(z, -kBusWeight);
        p.add_objective_constant(kBusWeight);
    }

    // Branch flows in the lifted space.
    for (const Branch* br : act.branches) {
        MlsProgram::BranchVars v;
        const std::string tag = std::to_string(br->id);
        v.wr = p.add_variable(0.0, conic::kInf, "wr_" + tag);
        v.wi = p.add_variable(-conic::kInf, conic::kInf, "wi_" + tag);
        v.p_fr = p.add_variable(-conic::kInf, conic::kInf, "p_fr_" + tag);
        v.q_fr = p.add_variable(-conic::kInf, conic::kInf, "q_fr_" + tag);
        v.p_to = p.add_variable(-conic::kInf, conic::kInf, "p_to_" + tag);
        v.q_to = p.add_variable(-conic::kInf, conic::kInf, "q_to_" + tag);
        m.branch[br->id] = v;

        const double g = br->series_admittance.real();
        const double b = br->series_admittance.imag();
        const double tr = br->tap.real(), ti = br->tap.imag();
        const double tm2 = tr * tr + ti * ti;
        const double bc = 0.5 * br->charging_b;
        const int wf = m.bus_w.at(br->from_bus), wt = m.bus_w.at(br->to_bus);

        p.add_equality(LinearExpr({{v.p_fr, -1.0},
                                   {wf, g / tm2},
                                   {v.wr, (-g * tr + b * ti) / tm2},
                                   {v.wi, (-b * tr - g * ti) / tm2}}),
                       0.0);
        p.add_equality(LinearExpr({{v.q_fr, -1.0},
                                   {wf, -(b + bc) / tm2},
                                   {v.wr, -(-b * tr - g * ti) / tm2},
                                   {v.wi, (-g * tr + b * ti) / tm2}}),
                       0.0);
        p.add_equality(LinearExpr({{v.p_to, -1.0},
                                   {wt, g},
                                   {v.wr, (-g * tr - b * ti) / tm2},
                                   {v.wi, -(-b * tr + g * ti) / tm2}}),
                       0.0);
        p.add_equality(LinearExpr({{v.q_to, -1.0},
                                   {wt, -(b + bc)},
                                   {v.wr, -(-b * tr + g * ti) / tm2},
                                   {v.wi, -(-g * tr - b * ti) / tm2}}),
                       0.0);

        const double t = std::tan(br->angle_limit);
        p.add_inequality(LinearExpr({{v.wi, 1.0}, {v.wr, -t}}), 0.0);
        p.add_inequality(LinearExpr({{v.wi, -1.0}, {v.wr, -t}}), 0.0);

        p.add_rotated_soc(LinearExpr::var(wf), LinearExpr::var(wt), {LinearExpr::var(v.wr), LinearExpr::var(v.wi)});

        const double rate = br->thermal_rating / base;
        p.add_soc({LinearExpr::var(v.p_fr), LinearExpr::var(v.q_fr)}, LinearExpr(rate));
        p.add_soc({LinearExpr::var(v.p_to), LinearExpr::var(v.q_to)}, LinearExpr(rate));
    }

    // Per-island scaling variables (cascading).
    if (mode == MlsMode::cascading) {
        for (auto& isl : m.islands) {
            const std::string tag = std::to_string(isl.reference_bus);
            isl.z_g = p.add_variable(0.0, 1.0, "z_g_" + tag);
            isl.z_d = p.add_variable(0.0, 1.0, "z_d_" + tag);
        }
    }

    auto lookup = [](const std::map<int, double>& values, int id, double fallback) {
        auto it = values.find(id);
        return it == values.end() ? fallback : it->second;
    };

    // Generators.
    for (const Generator* gen : act.gens) {
        const std::string tag = std::to_string(gen->id);
        const int zb = m.bus_z.at(gen->bus);
        const int pg = p.add_variable(-conic::kInf, conic::kInf, "pg_" + tag);
        const int qg = p.add_variable(-conic::kInf, conic::kInf, "qg_" + tag);
        m.gen_p[gen->id] = pg;
        m.gen_q[gen->id] = qg;
        if (mode == MlsMode::steady_state) {
            const int z = p.add_variable(0.0, 1.0, "z_gen_" + tag);
            m.gen_z[gen->id] = z;
            p.add_inequality(LinearExpr({{z, 1.0}, {zb, -1.0}}), 0.0);
            p.add_inequality(LinearExpr({{z, gen->pmin / base}, {pg, -1.0}}), 0.0);
            p.add_inequality(LinearExpr({{pg, 1.0}, {z, -gen->pmax / base}}), 0.0);
            p.add_inequality(LinearExpr({{z, gen->qmin / base}, {qg, -1.0}}), 0.0);
            p.add_inequality(LinearExpr({{qg, 1.0}, {z, -gen->qmax / base}}), 0.0);
            p.set_objective_coefficient(pg, kGenerationWeight * base);
        } else {
            const auto& isl = m.islands[island_of.at(gen->bus)];
            m.gen_z[gen->id] = isl.z_g;
            const double p0 = lookup(snap.gen_p0, gen->id, gen->pmax);
            p.add_equality(LinearExpr({{pg, 1.0}, {isl.z_g, -p0 / base}}), 0.0);
            p.set_objective_coefficient(pg, kGenerationWeight * base);
            if (p0 > 0.0) p.add_inequality(LinearExpr({{isl.z_g, 1.0}, {zb, -1.0}}), 0.0);
            if (auto it = snap.gen_bounds.find(gen->id); it != snap.gen_bounds.end()) {
                p.add_inequality(LinearExpr::var(pg), it->second.upper / base);
            }
            // Reactive capability follows the unit's bus status.
            p.add_inequality(LinearExpr({{zb, gen->qmin / base}, {qg, -1.0}}), 0.0);
            p.add_inequality(LinearExpr({{qg, 1.0}, {zb, -gen->qmax / base}}), 0.0);
        }
    }

    // Loads and the objective (MW shed).
    std::map<int, std::pair<double, double>> load_pq;  // per-load (p, q) MW at z = 1
    for (const Load* l : act.loads) {
        const double pd = mode == MlsMode::cascading ? lookup(snap.load_p0, l->id, l->pd) : l->pd;
        const double qd = mode == MlsMode::cascading ? lookup(snap.load_q0, l->id, l->qd) : l->qd;
        load_pq[l->id] = {pd, qd};
        const int zb = m.bus_z.at(l->bus);
        if (mode == MlsMode::steady_state) {
            const int z = p.add_variable(0.0, 1.0, "z_load_" + std::to_string(l->id));
            m.load_z[l->id] = z;
            p.add_inequality(LinearExpr({{z, 1.0}, {zb, -1.0}}), 0.0);
            p.set_objective_coefficient(z, p.objective()[static_cast<std::size_t>(z)] - pd);
            p.add_objective_constant(pd);
        } else {
            auto& isl = m.islands[island_of.at(l->bus)];
            m.load_z[l->id] = isl.z_d;
            if (pd != 0.0 || qd != 0.0) p.add_inequality(LinearExpr({{isl.z_d, 1.0}, {zb, -1.0}}), 0.0);
            isl.load_mw += pd;
        }
    }
    if (mode == MlsMode::cascading) {
        for (const auto& isl : m.islands) {
            p.set_objective_coefficient(isl.z_d, -isl.load_mw);
            p.add_objective_constant(isl.load_mw);
        }
    }

    // Nodal balance: flows out + shunt + losses + load = generation.
    std::map<int, LinearExpr> kcl_p, kcl_q;
    for (const Bus* b : act.buses) {
        const int w = m.bus_w.at(b->id);
        kcl_p[b->id].add(w, b->shunt_admittance.real());
        kcl_q[b->id].add(w, -b->shunt_admittance.imag());
    }
    for (const Branch* br : act.branches) {
        const auto& v = m.branch.at(br->id);
        kcl_p[br->from_bus].add(v.p_fr, 1.0);
        kcl_q[br->from_bus].add(v.q_fr, 1.0);
        kcl_p[br->to_bus].add(v.p_to, 1.0);
        kcl_q[br->to_bus].add(v.q_to, 1.0);
        if (br->is_transformer()) {
            const double ql = lookup(snap.q_loss, br->id, 0.0);
            if (ql != 0.0) kcl_q[br->from_bus].add(m.bus_z.at(br->from_bus), ql);
        }
    }
    for (const Generator* gen : act.gens) {
        kcl_p[gen->bus].add(m.gen_p.at(gen->id), -1.0);
        kcl_q[gen->bus].add(m.gen_q.at(gen->id), -1.0);
    }
    for (const Load* l : act.loads) {
        const auto [pd, qd] = load_pq.at(l->id);
        kcl_p[l->bus].add(m.load_z.at(l->id), pd / base);
        kcl_q[l->bus].add(m.load_z.at(l->id), qd / base);
    }
    for (const Bus* b : act.buses) {
        p.add_equality(kcl_p.at(b->id), 0.0);
        p.add_equality(kcl_q.at(b->id), 0.0);
    }
    return m;
}

double at(const std::vector<double>& x, int var) { return x[static_cast<std::size_t>(var)]; }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

MlsProgram build_steady_mls(const MlsSnapshot& snap) { return build(snap, MlsMode::steady_state); }

MlsProgram build_cascading_mls(const MlsSnapshot& snap) { return build(snap, MlsMode::cascading); }

MlsProgram build_mls(const MlsSnapshot& snap) { return build(snap, snap.mode); }

double BranchFlow::apparent_mva() const { return std::max(std::hypot(p_fr, q_fr), std::hypot(p_to, q_to)); }

MlsSolution extract_solution(const MlsProgram& prog, const conic::ConicSolution& sol, const MlsSnapshot& snap) {
    MlsSolution out;
    out.status = sol.status;
    out.iterations = sol.iterations;
    out.solve_seconds = sol.solve_seconds;
    const NetworkCase& net = snap.net;
    for (const auto& b : net.buses) {
        out.bus_status[b.id] = 0.0;
        out.bus_w[b.id] = 0.0;
    }
    if (sol.status != conic::SolveStatus::optimal) return out;

    const auto& x = sol.x;
    const double base = prog.base_mva;
    const CaseIndex idx = net.index();

    for (const auto& [bus, var] : prog.bus_w) {
        out.bus_w[bus] = std::max(0.0, at(x, var));
        out.bus_status[bus] = clamp01(at(x, prog.bus_z.at(bus)));
    }
    for (const auto& [id, v] : prog.branch) {
        out.flows[id] = {at(x, v.p_fr) * base, at(x, v.q_fr) * base, at(x, v.p_to) * base,
                         at(x, v.q_to) * base, at(x, v.wr),        at(x, v.wi)};
    }
    for (const auto& [id, var] : prog.gen_p) {
        out.gen_p[id] = at(x, var) * base;
        out.gen_q[id] = at(x, prog.gen_q.at(id)) * base;
        out.gen_status[id] = clamp01(at(x, prog.gen_z.at(id)));
        out.generation_mw += out.gen_p[id];
    }
    std::map<int, std::pair<double, double>> nominal;  // per-load (p, q) MW at z = 1
    for (const auto& [id, var] : prog.load_z) {
        const Load& l = net.loads[idx.load.at(id)];
        double pd = l.pd, qd = l.qd;
        if (prog.mode == MlsMode::cascading) {
            if (auto it = snap.load_p0.find(id); it != snap.load_p0.end()) pd = it->second;
            if (auto it = snap.load_q0.find(id); it != snap.load_q0.end()) qd = it->second;
        }
        nominal[id] = {pd, qd};
        const double z = clamp01(at(x, var));
        out.load_fraction[id] = z;
        out.load_p[id] = z * pd;
        out.load_q[id] = z * qd;
        out.served_mw += z * pd;
    }
    for (const auto& isl : prog.islands) {
        IslandScaling s;
        s.reference_bus = isl.reference_bus;
        s.buses = isl.buses;
        if (isl.z_g >= 0) s.z_g = clamp01(at(x, isl.z_g));
        if (isl.z_d >= 0) s.z_d = clamp01(at(x, isl.z_d));
        out.islands.push_back(std::move(s));
    }
    double demand = 0.0;
    for (const auto& [id, pq] : nominal) demand += pq.first;
    out.shed_mw = std::max(0.0, demand - out.served_mw);

    // Residual audit on the raw solver point.
    std::map<int, double> rp, rq;
    for (const auto& [bus, w] : prog.bus_w) {
        const Bus& b = net.buses[idx.bus.at(bus)];
        rp[bus] = b.shunt_admittance.real() * at(x, w);
        rq[bus] = -b.shunt_admittance.imag() * at(x, w);
        const double z = at(x, prog.bus_z.at(bus));
        const double lo = z * b.vmin * b.vmin - at(x, w);
        const double hi = at(x, w) - z * b.vmax * b.vmax;
        out.max_status_violation = std::max({out.max_status_violation, lo, hi});
    }
    for (const auto& [id, v] : prog.branch) {
        const Branch& br = net.branches[idx.branch.at(id)];
        rp[br.from_bus] += at(x, v.p_fr);
        rq[br.from_bus] += at(x, v.q_fr);
        rp[br.to_bus] += at(x, v.p_to);
        rq[br.to_bus] += at(x, v.q_to);
        if (br.is_transformer()) {
            if (auto it = snap.q_loss.find(id); it != snap.q_loss.end()) {
                rq[br.from_bus] += it->second * at(x, prog.bus_z.at(br.from_bus));
            }
        }
        const double wr = at(x, v.wr), wi = at(x, v.wi);
        const double viol = wr * wr + wi * wi - at(x, prog.bus_w.at(br.from_bus)) * at(x, prog.bus_w.at(br.to_bus));
        out.max_cone_violation = std::max(out.max_cone_violation, viol);
    }
    for (const auto& [id, var] : prog.gen_p) {
        const int bus = net.generators[idx.gen.at(id)].bus;
        rp[bus] -= at(x, var);
        rq[bus] -= at(x, prog.gen_q.at(id));
    }
    for (const auto& [id, var] : prog.load_z) {
        const int bus = net.loads[idx.load.at(id)].bus;
        const auto [pd, qd] = nominal.at(id);
        rp[bus] += at(x, var) * pd / base;
        rq[bus] += at(x, var) * qd / base;
    }
    for (auto& [bus, r] : rp) out.max_kcl_residual = std::max(out.max_kcl_residual, std::abs(r));
    for (auto& [bus, r] : rq) out.max_kcl_residual = std::max(out.max_kcl_residual, std::abs(r));
    return out;
}

MlsSolution solve_mls(const MlsSnapshot& snap, const conic::SolverSettings& settings) {
    const MlsProgram prog = build_mls(snap);
    return extract_solution(prog, conic::solve(prog.program, settings), snap);
}

std::string format_mls_solution(const MlsSolution& sol) {
    using textio::fmt;
    std::ostringstream out;
    out << "[summary]\nstatus " << conic::to_string(sol.status) << "\nshed_mw " << fmt(sol.shed_mw) << "\nserved_mw "
        << fmt(sol.served_mw) << "\ngeneration_mw " << fmt(sol.generation_mw) << "\nmax_kcl_residual "
        << fmt(sol.max_kcl_residual) << "\nmax_cone_violation " << fmt(sol.max_cone_violation) << '\n';
    out << "[bus]\nbus_id status w_ii\n";
    for (const auto& [id, w] : sol.bus_w) out << id << ' ' << fmt(sol.bus_status.at(id)) << ' ' << fmt(w) << '\n';
    out << "[load]\nload_id z_d p_mw q_mvar\n";
    for (const auto& [id, z] : sol.load_fraction) {
        out << id << ' ' << fmt(z) << ' ' << fmt(sol.load_p.at(id)) << ' ' << fmt(sol.load_q.at(id)) << '\n';
    }
    out << "[gen]\ngen_id z_g p_mw q_mvar\n";
    for (const auto& [id, p] : sol.gen_p) {
        out << id << ' ' << fmt(sol.gen_status.at(id)) << ' ' << fmt(p) << ' ' << fmt(sol.gen_q.at(id)) << '\n';
    }
    out << "[branch]\nbranch_id p_fr q_fr p_to q_to s_mva\n";
    for (const auto& [id, f] : sol.flows) {
        out << id << ' ' << fmt(f.p_fr) << ' ' << fmt(f.q_fr) << ' ' << fmt(f.p_to) << ' ' << fmt(f.q_to) << ' '
            << fmt(f.apparent_mva()) << '\n';
    }
    return out.str();
}

}  // namespace gmdcascade
