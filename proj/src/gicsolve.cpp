#include "gmdcascade/gicsolve.hpp"

#include "gmdcascade/textio.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gmdcascade {

std::size_t GicNetwork::add_node(DcNodeKind kind, int ref) {
    nodes.push_back({kind, ref});
    return nodes.size() - 1;
}

std::size_t GicNetwork::add_branch(std::size_t from, std::size_t to, double conductance, DcBranchRole role,
                                   int ac_branch) {
    branches.push_back({from, to, conductance, role, ac_branch});
    return branches.size() - 1;
}

const TransformerGic* GicSolution::transformer(int branch) const {
    for (const auto& t : transformers) {
        if (t.branch == branch) return &t;
    }
    return nullptr;
}

GicNetwork build_gic_network(const NetworkCase& net) {
    const CaseIndex idx = net.index();
    GicNetwork g;

    std::map<int, std::size_t> bus_node;
    for (const auto& b : net.buses) {
        if (b.status) bus_node[b.id] = g.add_node(DcNodeKind::bus, b.id);
    }
    std::map<int, std::size_t> neutral;
    for (const auto& s : net.substations) neutral[s.id] = g.add_node(DcNodeKind::neutral, s.id);
    g.ground = g.add_node(DcNodeKind::ground);

    for (const auto& br : net.branches) {
        if (!branch_in_service(net, idx, br)) continue;
        const std::string who = "branch " + std::to_string(br.id);
        const auto& fb = net.buses[idx.bus.at(br.from_bus)];
        const auto& tb = net.buses[idx.bus.at(br.to_bus)];

        if (br.kind == BranchKind::line) {
            if (br.series_compensated) continue;
            double r_ohm = 0.0;
            if (br.dc_resistance) {
                r_ohm = *br.dc_resistance;
            } else {
                if (std::abs(br.series_admittance) == 0.0) throw GicError(who + ": line has zero series admittance");
                const double r_pu = (1.0 / br.series_admittance).real();
                r_ohm = r_pu * fb.base_kv * fb.base_kv / net.base_mva;
            }
            if (!(r_ohm > 0.0)) throw GicError(who + ": line has no positive dc resistance");
            g.line_branch[br.id] = g.add_branch(bus_node.at(br.from_bus), bus_node.at(br.to_bus), 3.0 / r_ohm,
                                                DcBranchRole::line, br.id);
            continue;
        }

        if (!br.xfmr_config) continue;
        const auto& x = *br.xfmr_config;
        if (x.config == XfmrConfig::delta_delta) continue;

        const bool from_high = fb.base_kv >= tb.base_kv;
        const int high_bus = from_high ? fb.id : tb.id;
        const int low_bus = from_high ? tb.id : fb.id;
        const auto& wr = x.winding_resistances;

        auto neutral_for = [&](int bus) -> std::size_t {
            int sub = 0;
            if (x.grounded_substation) {
                sub = *x.grounded_substation;
            } else if (auto it = idx.bus_substation.find(bus); it != idx.bus_substation.end()) {
                sub = it->second;
            } else {
                throw GicError(who + ": grounded winding at bus " + std::to_string(bus) + " has no substation");
            }
            return neutral.at(sub);
        };
        auto require = [&](const std::optional<double>& r, const char* winding) {
            if (!r) throw GicError(who + ": " + to_string(x.config) + " requires a " + winding + " winding resistance");
            return 3.0 / *r;
        };

        TransformerWindings tw;
        tw.branch = br.id;
        switch (x.config) {
            case XfmrConfig::gwye_delta_gsu:
                tw.high = g.add_branch(bus_node.at(high_bus), neutral_for(high_bus), require(wr.high, "high"),
                                       DcBranchRole::winding_high, br.id);
                break;
            case XfmrConfig::gwye_gwye:
            case XfmrConfig::gwye_three_winding:
                tw.high = g.add_branch(bus_node.at(high_bus), neutral_for(high_bus), require(wr.high, "high"),
                                       DcBranchRole::winding_high, br.id);
                tw.low = g.add_branch(bus_node.at(low_bus), neutral_for(low_bus), require(wr.low, "low"),
                                      DcBranchRole::winding_low, br.id);
                if (x.config == XfmrConfig::gwye_three_winding && wr.tertiary && x.tertiary_bus &&
                    bus_node.contains(*x.tertiary_bus)) {
                    tw.tertiary = g.add_branch(bus_node.at(*x.tertiary_bus), neutral_for(*x.tertiary_bus),
                                               3.0 / *wr.tertiary, DcBranchRole::winding_tertiary, br.id);
                }
                break;
            case XfmrConfig::gwye_gwye_auto:
                tw.series = g.add_branch(bus_node.at(high_bus), bus_node.at(low_bus), require(wr.series, "series"),
                                         DcBranchRole::winding_series, br.id);
                tw.common = g.add_branch(bus_node.at(low_bus), neutral_for(low_bus), require(wr.common, "common"),
                                         DcBranchRole::winding_common, br.id);
                break;
            case XfmrConfig::delta_delta:
                break;
        }
        g.transformers.push_back(tw);
    }

    for (const auto& s : net.substations) {
        const double r = std::max(s.grounding_resistance, kMinGroundingOhms);
        g.add_branch(neutral.at(s.id), g.ground, 1.0 / r, DcBranchRole::grounding, s.id);
    }
    return g;
}

std::vector<double> emf_vector(const GicNetwork& net, const std::map<int, double>& line_volts) {
    std::vector<double> emf(net.branches.size(), 0.0);
    for (const auto& [id, volts] : line_volts) {
        if (auto it = net.line_branch.find(id); it != net.line_branch.end()) emf[it->second] = volts;
    }
    return emf;
}

namespace {

// Union-find over nodes joined by positive-conductance branches.
struct Components {
    std::vector<std::size_t> parent;
    explicit Components(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

std::string describe(const DcNode& n) {
    switch (n.kind) {
        case DcNodeKind::bus: return "bus " + std::to_string(n.ref);
        case DcNodeKind::neutral: return "neutral of substation " + std::to_string(n.ref);
        case DcNodeKind::ground: return "ground";
    }
    return "node";
}

}  // namespace

GicSolution solve_gic(const GicNetwork& net, std::span<const double> emf, const GicSolveOptions& opts) {
    const std::size_t n = net.nodes.size();
    if (emf.size() != net.branches.size()) throw GicError("emf vector length does not match dc branch count");
    for (const auto& b : net.branches) {
        if (b.conductance < 0.0) throw GicError("negative dc conductance");
    }

    Components comps(n);
    for (const auto& b : net.branches) {
        if (b.conductance > 0.0) comps.unite(b.from, b.to);
    }

    // Every component needs one node held at zero potential: ground for the
    // grounded component, and (optionally) the lowest node of a floating one.
    std::vector<bool> pinned(n, false);
    pinned[net.ground] = true;
    const std::size_t ground_root = comps.find(net.ground);
    std::vector<bool> root_has_emf(n, false);
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        if (emf[k] != 0.0 && net.branches[k].conductance > 0.0) root_has_emf[comps.find(net.branches[k].from)] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = comps.find(i);
        if (root != i || root == ground_root) continue;
        if (root_has_emf[root] && !opts.pin_floating) {
            throw GicError("singular GIC system: floating subnetwork containing " + describe(net.nodes[root]) +
                           " has nonzero emf and no ground path");
        }
        pinned[root] = true;
    }

    std::vector<long> col(n, -1);
    long unknowns = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!pinned[i]) col[i] = unknowns++;
    }

    std::vector<double> j(n, 0.0);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(4 * net.branches.size());
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const auto& b = net.branches[k];
        if (b.conductance == 0.0) continue;
        const double g = b.conductance;
        const long cf = col[b.from], ct = col[b.to];
        if (cf >= 0) trips.emplace_back(cf, cf, g);
        if (ct >= 0) trips.emplace_back(ct, ct, g);
        if (cf >= 0 && ct >= 0) {
            trips.emplace_back(cf, ct, -g);
            trips.emplace_back(ct, cf, -g);
        }
        j[b.from] -= g * emf[k];
        j[b.to] += g * emf[k];
    }

    GicSolution sol;
    sol.node_voltages.assign(n, 0.0);
    if (unknowns > 0) {
        Eigen::SparseMatrix<double> G(unknowns, unknowns);
        G.setFromTriplets(trips.begin(), trips.end());
        Eigen::VectorXd rhs(unknowns);
        for (std::size_t i = 0; i < n; ++i) {
            if (col[i] >= 0) rhs[col[i]] = j[i];
        }
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(G);
        if (ldlt.info() != Eigen::Success) throw GicError("GIC conductance matrix factorization failed");
        Eigen::VectorXd v = ldlt.solve(rhs);
        // One step of iterative refinement keeps the KCL residual tight on
        // badly conditioned grounding (near-zero resistances).
        Eigen::VectorXd r = rhs - G * v;
        v += ldlt.solve(r);
        for (std::size_t i = 0; i < n; ++i) {
            if (col[i] >= 0) sol.node_voltages[i] = v[col[i]];
        }
    }

    sol.branch_currents.resize(net.branches.size());
    std::vector<double> kcl(n, 0.0);
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const auto& b = net.branches[k];
        const double i = b.conductance * (sol.node_voltages[b.from] - sol.node_voltages[b.to] + emf[k]);
        sol.branch_currents[k] = i;
        kcl[b.from] += i;
        kcl[b.to] -= i;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!pinned[i]) sol.max_kcl_residual = std::max(sol.max_kcl_residual, std::abs(kcl[i]));
    }

    for (const auto& tw : net.transformers) {
        TransformerGic t;
        t.branch = tw.branch;
        auto current = [&](const std::optional<std::size_t>& k) -> std::optional<double> {
            if (!k) return std::nullopt;
            return sol.branch_currents[*k];
        };
        t.windings.high = current(tw.high);
        t.windings.low = current(tw.low);
        t.windings.series = current(tw.series);
        t.windings.common = current(tw.common);
        t.windings.tertiary = current(tw.tertiary);
        sol.transformers.push_back(t);
    }
    return sol;
}

double effective_gic(const TransformerGicModel& model, const WindingCurrents& w) {
    auto need = [&](const std::optional<double>& v, const char* name) {
        if (!v) {
            throw GicError(std::string("configuration ") + to_string(model.config) + " requires the " + name +
                           " winding current");
        }
        return *v;
    };
    const double a = model.alpha;
    switch (model.config) {
        case XfmrConfig::gwye_delta_gsu:
            return std::abs(need(w.high, "high"));
        case XfmrConfig::gwye_gwye:
            return std::abs(need(w.high, "high") + need(w.low, "low") / a);
        case XfmrConfig::gwye_gwye_auto:
            return std::abs((a * need(w.series, "series") + need(w.common, "common")) / (a + 1.0));
        case XfmrConfig::gwye_three_winding: {
            if (!model.beta) throw GicError("three-winding transformer requires beta");
            const double tertiary = w.tertiary.value_or(0.0);  // delta tertiary carries no GIC
            return std::abs(need(w.high, "high") + need(w.low, "low") / a + tertiary / *model.beta);
        }
        case XfmrConfig::delta_delta:
            return 0.0;
    }
    return 0.0;
}

double qloss(const TransformerGicModel& model, double i_eff, double v) {
    if (i_eff < 0.0) throw std::invalid_argument("effective GIC must be >= 0");
    return model.k_loss * std::abs(v) * i_eff / (3.0 * model.rated_power);
}

void attach_losses(GicSolution& sol, const NetworkCase& net) {
    const CaseIndex idx = net.index();
    for (auto& t : sol.transformers) {
        const auto& br = net.branches[idx.branch.at(t.branch)];
        if (!br.xfmr_config) continue;
        t.i_eff = effective_gic(*br.xfmr_config, t.windings);
        t.q_loss = qloss(*br.xfmr_config, t.i_eff);
    }
}

std::string format_gic_network(const GicNetwork& net, std::span<const double> emf) {
    static const char* const kRole[] = {"line", "winding_high", "winding_low", "winding_series",
                                        "winding_common", "winding_tertiary", "grounding"};
    std::ostringstream out;
    out << "# nodes\nnode kind ref\n";
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        const auto& n = net.nodes[i];
        const char* kind = n.kind == DcNodeKind::bus ? "bus" : n.kind == DcNodeKind::neutral ? "neutral" : "ground";
        out << i << ' ' << kind << ' ' << n.ref << '\n';
    }
    out << "# branches\nbranch from to conductance_s emf_v role owner\n";
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const auto& b = net.branches[k];
        out << k << ' ' << b.from << ' ' << b.to << ' ' << textio::fmt(b.conductance) << ' '
            << textio::fmt(k < emf.size() ? emf[k] : 0.0) << ' ' << kRole[static_cast<int>(b.role)] << ' '
            << b.ac_branch << '\n';
    }
    return out.str();
}

}  // namespace gmdcascade
