#include "gmdcascade/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <unordered_set>

namespace gmdcascade {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

template <typename T>
std::unordered_map<int, std::size_t> index_by_id(const std::vector<T>& items, const char* what) {
    std::unordered_map<int, std::size_t> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!out.emplace(items[i].id, i).second) {
            fail(std::string("duplicate ") + what + " id " + std::to_string(items[i].id));
        }
    }
    return out;
}

}  // namespace

const char* to_string(XfmrConfig config) {
    switch (config) {
        case XfmrConfig::delta_delta: return "delta_delta";
        case XfmrConfig::gwye_delta_gsu: return "gwye_delta_gsu";
        case XfmrConfig::gwye_gwye: return "gwye_gwye";
        case XfmrConfig::gwye_gwye_auto: return "gwye_gwye_auto";
        case XfmrConfig::gwye_three_winding: return "gwye_three_winding";
    }
    return "unknown";
}

std::optional<XfmrConfig> xfmr_config_from_string(const std::string& name) {
    for (auto c : {XfmrConfig::delta_delta, XfmrConfig::gwye_delta_gsu, XfmrConfig::gwye_gwye,
                   XfmrConfig::gwye_gwye_auto, XfmrConfig::gwye_three_winding}) {
        if (name == to_string(c)) return c;
    }
    return std::nullopt;
}

CaseIndex NetworkCase::index() const {
    CaseIndex idx;
    idx.bus = index_by_id(buses, "bus");
    idx.branch = index_by_id(branches, "branch");
    idx.gen = index_by_id(generators, "gen");
    idx.load = index_by_id(loads, "load");
    idx.substation = index_by_id(substations, "substation");
    for (std::size_t i = 0; i < relays.size(); ++i) {
        if (!idx.relay.emplace(relays[i].branch, i).second) {
            fail("duplicate relay for branch " + std::to_string(relays[i].branch));
        }
    }
    for (const auto& sub : substations) {
        for (int b : sub.buses) {
            if (!idx.bus_substation.emplace(b, sub.id).second) {
                fail("bus " + std::to_string(b) + " belongs to more than one substation");
            }
        }
    }
    return idx;
}

const Bus& NetworkCase::bus(int id) const {
    auto it = std::find_if(buses.begin(), buses.end(), [id](const Bus& b) { return b.id == id; });
    if (it == buses.end()) throw std::out_of_range("unknown bus " + std::to_string(id));
    return *it;
}

const Branch& NetworkCase::branch(int id) const {
    auto it = std::find_if(branches.begin(), branches.end(), [id](const Branch& b) { return b.id == id; });
    if (it == branches.end()) throw std::out_of_range("unknown branch " + std::to_string(id));
    return *it;
}

void validate(const NetworkCase& net) {
    if (!(net.base_mva > 0.0)) fail("base_mva must be positive");
    if (net.buses.empty()) fail("no buses");
    const CaseIndex idx = net.index();

    auto require_bus = [&](int bus, const std::string& owner) {
        if (!idx.bus.contains(bus)) fail(owner + " references missing bus " + std::to_string(bus));
    };

    for (const auto& b : net.buses) {
        const std::string who = "bus " + std::to_string(b.id);
        if (!(b.vmin > 0.0)) fail(who + ": vmin must be > 0");
        if (!(b.vmax >= b.vmin)) fail(who + ": vmax must be >= vmin");
        if (!(std::abs(b.lat) <= 90.0)) fail(who + ": |lat| must be <= 90");
        if (!(std::abs(b.lon) <= 180.0)) fail(who + ": |lon| must be <= 180");
        if (!(b.base_kv > 0.0)) fail(who + ": base_kv must be > 0");
    }

    for (const auto& br : net.branches) {
        const std::string who = "branch " + std::to_string(br.id);
        require_bus(br.from_bus, who);
        require_bus(br.to_bus, who);
        if (br.from_bus == br.to_bus) fail(who + ": from_bus equals to_bus");
        if (!(br.thermal_rating > 0.0)) fail(who + ": thermal_rating must be > 0");
        if (!(br.angle_limit > 0.0)) fail(who + ": angle_limit must be > 0");
        if (br.angle_limit >= std::numbers::pi / 2) fail(who + ": angle_limit must be below 90 degrees");
        if (br.kind == BranchKind::transformer) {
            if (br.charging_b != 0.0) fail(who + ": transformer charging_b must be 0");
            if (std::abs(br.tap) <= 0.0) fail(who + ": tap magnitude must be > 0");
        } else {
            if (br.tap != Complex(1.0, 0.0)) fail(who + ": line tap must be 1");
            if (br.xfmr_config) fail(who + ": line carries xfmr_config");
        }
        if (br.dc_resistance && !(*br.dc_resistance > 0.0)) fail(who + ": dc_resistance must be > 0");
        if (br.xfmr_config) {
            const auto& x = *br.xfmr_config;
            if (!(x.alpha > 0.0)) fail(who + ": alpha must be > 0");
            if (x.beta && !(*x.beta > 0.0)) fail(who + ": beta must be > 0");
            if (x.config == XfmrConfig::gwye_three_winding && !x.beta) {
                fail(who + ": three-winding transformer requires beta");
            }
            if (!(x.k_loss >= 0.0)) fail(who + ": k_loss must be >= 0");
            if (!(x.rated_power > 0.0)) fail(who + ": rated_power must be > 0");
            const auto& wr = x.winding_resistances;
            for (const auto& r : {wr.high, wr.low, wr.series, wr.common, wr.tertiary}) {
                if (r && !(*r > 0.0)) fail(who + ": winding resistances must be > 0");
            }
            if (x.grounded_substation && !idx.substation.contains(*x.grounded_substation)) {
                fail(who + " references missing substation " + std::to_string(*x.grounded_substation));
            }
            if (x.tertiary_bus) require_bus(*x.tertiary_bus, who);
        }
    }

    for (const auto& g : net.generators) {
        const std::string who = "gen " + std::to_string(g.id);
        require_bus(g.bus, who);
        if (!(g.pmax >= g.pmin)) fail(who + ": pmax must be >= pmin");
        if (!(g.qmax >= g.qmin)) fail(who + ": qmax must be >= qmin");
        if (!(g.ramp_rate >= 0.0)) fail(who + ": ramp_rate must be >= 0");
    }

    for (const auto& l : net.loads) {
        const std::string who = "load " + std::to_string(l.id);
        require_bus(l.bus, who);
        if (!(l.pd >= 0.0)) fail(who + ": pd must be >= 0");
    }

    for (const auto& s : net.substations) {
        const std::string who = "substation " + std::to_string(s.id);
        if (!(s.grounding_resistance >= 0.0)) fail(who + ": grounding_resistance must be >= 0");
        if (!(std::abs(s.lat) <= 90.0)) fail(who + ": |lat| must be <= 90");
        for (int b : s.buses) require_bus(b, who);
    }

    for (const auto& r : net.relays) {
        const std::string who = "relay on branch " + std::to_string(r.branch);
        if (!idx.branch.contains(r.branch)) fail(who + " references missing branch " + std::to_string(r.branch));
        if (!(r.pickup_ratio > 0.0)) fail(who + ": pickup_ratio must be > 0");
        if (!(r.trip_threshold > 0.0)) fail(who + ": trip_threshold must be > 0");
    }
}

bool branch_in_service(const NetworkCase& net, const CaseIndex& idx, const Branch& br) {
    if (!br.status) return false;
    return net.buses[idx.bus.at(br.from_bus)].status && net.buses[idx.bus.at(br.to_bus)].status;
}

double total_load_mw(const NetworkCase& net) {
    const auto idx = net.index();
    double total = 0.0;
    for (const auto& l : net.loads) {
        if (l.status && net.buses[idx.bus.at(l.bus)].status) total += l.pd;
    }
    return total;
}

double total_pmax_mw(const NetworkCase& net) {
    const auto idx = net.index();
    double total = 0.0;
    for (const auto& g : net.generators) {
        if (g.status && net.buses[idx.bus.at(g.bus)].status) total += g.pmax;
    }
    return total;
}

NetworkCase attach_gsu_transformers(const NetworkCase& net, const GsuDefaults& defaults) {
    NetworkCase out = net;
    auto idx = out.index();

    std::unordered_set<int> behind_gsu;
    for (const auto& br : out.branches) {
        if (br.xfmr_config && br.xfmr_config->config == XfmrConfig::gwye_delta_gsu) {
            behind_gsu.insert(br.from_bus);
            behind_gsu.insert(br.to_bus);
        }
    }

    int next_bus = 0;
    for (const auto& b : out.buses) next_bus = std::max(next_bus, b.id);
    int next_branch = 0;
    for (const auto& br : out.branches) next_branch = std::max(next_branch, br.id);
    int next_sub = 0;
    for (const auto& s : out.substations) next_sub = std::max(next_sub, s.id);

    for (auto& gen : out.generators) {
        if (behind_gsu.contains(gen.bus)) continue;
        const Bus network_bus = out.buses[idx.bus.at(gen.bus)];

        int sub_id = 0;
        if (auto it = idx.bus_substation.find(network_bus.id); it != idx.bus_substation.end()) {
            sub_id = it->second;
        } else {
            Substation sub;
            sub.id = ++next_sub;
            sub.lat = network_bus.lat;
            sub.lon = network_bus.lon;
            sub.grounding_resistance = defaults.grounding_resistance;
            sub.buses.push_back(network_bus.id);
            out.substations.push_back(sub);
            idx.substation.emplace(sub.id, out.substations.size() - 1);
            idx.bus_substation.emplace(network_bus.id, sub.id);
            sub_id = sub.id;
        }

        Bus gbus = network_bus;
        gbus.id = ++next_bus;
        gbus.name = network_bus.name + "_G" + std::to_string(gen.id);
        gbus.base_kv = defaults.generator_kv;
        gbus.is_reference = false;
        gbus.shunt_admittance = {0.0, 0.0};
        out.buses.push_back(gbus);
        out.substations[idx.substation.at(sub_id)].buses.push_back(gbus.id);
        idx.bus_substation.emplace(gbus.id, sub_id);

        const double rated = std::max(gen.pmax, 1.0);
        const double qcap = std::max(std::abs(gen.qmin), std::abs(gen.qmax));
        const double zscale = out.base_mva / rated;

        Branch gsu;
        gsu.id = ++next_branch;
        gsu.from_bus = network_bus.id;
        gsu.to_bus = gbus.id;
        gsu.kind = BranchKind::transformer;
        gsu.series_admittance = 1.0 / Complex(defaults.resistance * zscale, defaults.reactance * zscale);
        gsu.charging_b = 0.0;
        gsu.tap = {1.0, 0.0};
        gsu.angle_limit = std::numbers::pi / 3.0;
        gsu.thermal_rating = std::max(std::hypot(rated, qcap), 1.0) * 1.05;
        gsu.status = true;

        TransformerGicModel model;
        model.config = XfmrConfig::gwye_delta_gsu;
        model.alpha = network_bus.base_kv / defaults.generator_kv;
        model.k_loss = defaults.k_loss;
        model.rated_power = rated;
        model.winding_resistances.high = defaults.winding_resistance;
        model.grounded_substation = sub_id;
        gsu.xfmr_config = model;
        out.branches.push_back(gsu);

        gen.bus = gbus.id;
        behind_gsu.insert(gbus.id);
    }
    return out;
}

NetworkCase apply_contingencies(const NetworkCase& net, const ContingencySpec& spec) {
    NetworkCase out = net;
    const auto idx = out.index();
    for (int id : spec.bus_outages) {
        auto it = idx.bus.find(id);
        if (it == idx.bus.end()) throw ValidationError("unknown bus id " + std::to_string(id) + " in outage list");
        out.buses[it->second].status = false;
    }
    for (int id : spec.branch_outages) {
        auto it = idx.branch.find(id);
        if (it == idx.branch.end()) throw ValidationError("unknown branch id " + std::to_string(id) + " in outage list");
        out.branches[it->second].status = false;
    }
    if (!(spec.load_scale >= 0.0)) throw ValidationError("load scale factor must be >= 0");
    for (auto& l : out.loads) {
        l.pd *= spec.load_scale;
        l.qd *= spec.load_scale;
    }
    return out;
}

}  // namespace gmdcascade
