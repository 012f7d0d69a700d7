#pragma once

// Small hand-built cases shared by the unit tests.

#include "gmdcascade/netmodel.hpp"

#include <string>

namespace gmdtest {

inline std::string data_path(const std::string& name) { return std::string(GMD_DATA_DIR) + "/" + name; }

inline gmdcascade::Bus bus(int id, double kv = 345.0, double lat = 37.0, double lon = -78.0) {
    gmdcascade::Bus b;
    b.id = id;
    b.name = "B" + std::to_string(id);
    b.base_kv = kv;
    b.lat = lat;
    b.lon = lon;
    return b;
}

inline gmdcascade::Branch line(int id, int from, int to, double x = 0.05, double rating = 500.0, double r = 0.0) {
    gmdcascade::Branch br;
    br.id = id;
    br.from_bus = from;
    br.to_bus = to;
    br.kind = gmdcascade::BranchKind::line;
    br.series_admittance = 1.0 / gmdcascade::Complex(r, x);
    br.angle_limit = 0.5;
    br.thermal_rating = rating;
    return br;
}

inline gmdcascade::Branch transformer(int id, int from, int to, gmdcascade::XfmrConfig cfg, double x = 0.05,
                                      double rating = 500.0) {
    gmdcascade::Branch br = line(id, from, to, x, rating);
    br.kind = gmdcascade::BranchKind::transformer;
    gmdcascade::TransformerGicModel m;
    m.config = cfg;
    m.k_loss = 1.8;
    m.rated_power = 100.0;
    m.winding_resistances.high = 0.5;
    m.winding_resistances.low = 0.5;
    m.winding_resistances.series = 0.5;
    m.winding_resistances.common = 0.5;
    br.xfmr_config = m;
    return br;
}

inline gmdcascade::Generator gen(int id, int bus, double pmax, double pmin = 0.0, double qcap = 1000.0) {
    gmdcascade::Generator g;
    g.id = id;
    g.bus = bus;
    g.pmin = pmin;
    g.pmax = pmax;
    g.qmin = -qcap;
    g.qmax = qcap;
    g.ramp_rate = 1000.0;
    return g;
}

inline gmdcascade::Load load(int id, int bus, double pd, double qd = 0.0) {
    gmdcascade::Load l;
    l.id = id;
    l.bus = bus;
    l.pd = pd;
    l.qd = qd;
    return l;
}

inline gmdcascade::Substation substation(int id, std::vector<int> buses, double rg = 0.5) {
    gmdcascade::Substation s;
    s.id = id;
    s.lat = 37.0;
    s.lon = -78.0;
    s.grounding_resistance = rg;
    s.buses = std::move(buses);
    return s;
}

}  // namespace gmdtest
