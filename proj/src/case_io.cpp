#include "gmdcascade/netmodel.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numbers>
#include <sstream>

namespace gmdcascade {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Field accessor that carries a path like "branch[3].tap" for error messages.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
        throw CaseParseError(path_ + "." + field + ": " + msg);
    }

    [[nodiscard]] bool has(const char* field) const { return node_.contains(field) && !node_.at(field).is_null(); }

    [[nodiscard]] double number(const char* field) const {
        if (!has(field)) fail(field, "missing required number");
        const auto& v = node_.at(field);
        if (!v.is_number()) fail(field, "expected number");
        return v.get<double>();
    }
    [[nodiscard]] double number(const char* field, double fallback) const {
        return has(field) ? number(field) : fallback;
    }
    [[nodiscard]] std::optional<double> maybe_number(const char* field) const {
        if (!has(field)) return std::nullopt;
        return number(field);
    }
    [[nodiscard]] int integer(const char* field) const {
        if (!has(field)) fail(field, "missing required integer");
        const auto& v = node_.at(field);
        if (!v.is_number_integer()) fail(field, "expected integer");
        return v.get<int>();
    }
    [[nodiscard]] std::optional<int> maybe_integer(const char* field) const {
        if (!has(field)) return std::nullopt;
        return integer(field);
    }
    [[nodiscard]] bool boolean(const char* field, bool fallback) const {
        if (!has(field)) return fallback;
        const auto& v = node_.at(field);
        if (!v.is_boolean()) fail(field, "expected true/false");
        return v.get<bool>();
    }
    [[nodiscard]] std::string string(const char* field, const std::string& fallback) const {
        if (!has(field)) return fallback;
        const auto& v = node_.at(field);
        if (!v.is_string()) fail(field, "expected string");
        return v.get<std::string>();
    }
    // Complex values are stored as two-element arrays [re, im].
    [[nodiscard]] Complex pair(const char* field, Complex fallback) const {
        if (!has(field)) return fallback;
        const auto& v = node_.at(field);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            fail(field, "expected [number, number]");
        }
        return {v[0].get<double>(), v[1].get<double>()};
    }
    [[nodiscard]] Reader child(const char* field) const {
        if (!has(field) || !node_.at(field).is_object()) fail(field, "expected object");
        return Reader(node_.at(field), path_ + "." + field);
    }
    [[nodiscard]] std::vector<int> int_list(const char* field) const {
        std::vector<int> out;
        if (!has(field)) return out;
        const auto& v = node_.at(field);
        if (!v.is_array()) fail(field, "expected array of integers");
        for (const auto& e : v) {
            if (!e.is_number_integer()) fail(field, "expected array of integers");
            out.push_back(e.get<int>());
        }
        return out;
    }

private:
    const json& node_;
    std::string path_;
};

template <typename F>
void for_each_entry(const json& doc, const char* key, F&& fn) {
    if (!doc.contains(key)) return;
    const auto& arr = doc.at(key);
    if (!arr.is_array()) throw CaseParseError(std::string(key) + ": expected array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_object()) {
            throw CaseParseError(std::string(key) + "[" + std::to_string(i) + "]: expected object");
        }
        fn(Reader(arr[i], std::string(key) + "[" + std::to_string(i) + "]"));
    }
}

TransformerGicModel read_xfmr(const Reader& r) {
    TransformerGicModel m;
    const std::string cfg = r.string("config", "");
    auto parsed = xfmr_config_from_string(cfg);
    if (!parsed) r.fail("config", "unknown transformer configuration '" + cfg + "'");
    m.config = *parsed;
    m.alpha = r.number("alpha", 1.0);
    m.beta = r.maybe_number("beta");
    m.k_loss = r.number("k_loss", 0.0);
    m.rated_power = r.number("rated_power");
    if (r.has("winding_resistances")) {
        const Reader w = r.child("winding_resistances");
        m.winding_resistances.high = w.maybe_number("high");
        m.winding_resistances.low = w.maybe_number("low");
        m.winding_resistances.series = w.maybe_number("series");
        m.winding_resistances.common = w.maybe_number("common");
        m.winding_resistances.tertiary = w.maybe_number("tertiary");
    }
    m.grounded_substation = r.maybe_integer("grounded_substation");
    m.tertiary_bus = r.maybe_integer("tertiary_bus");
    return m;
}

std::string locate(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json to_pair(Complex c) { return json::array({c.real(), c.imag()}); }

}  // namespace

NetworkCase parse_case(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CaseParseError("case parse error at " + locate(text, e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) throw CaseParseError("case document must be an object");

    NetworkCase net;
    const Reader top(doc, "case");
    net.base_mva = top.number("base_mva", 100.0);

    for_each_entry(doc, "bus", [&](const Reader& r) {
        Bus b;
        b.id = r.integer("id");
        b.name = r.string("name", "");
        b.base_kv = r.number("base_kv");
        b.vmin = r.number("vmin");
        b.vmax = r.number("vmax");
        b.lat = r.number("lat");
        b.lon = r.number("lon");
        b.status = r.boolean("status", true);
        b.is_reference = r.boolean("is_reference", false);
        b.shunt_admittance = r.pair("shunt_admittance", {0.0, 0.0});
        net.buses.push_back(std::move(b));
    });

    for_each_entry(doc, "branch", [&](const Reader& r) {
        Branch br;
        br.id = r.integer("id");
        br.from_bus = r.integer("from_bus");
        br.to_bus = r.integer("to_bus");
        const std::string kind = r.string("kind", "line");
        if (kind == "line") {
            br.kind = BranchKind::line;
        } else if (kind == "transformer") {
            br.kind = BranchKind::transformer;
        } else {
            r.fail("kind", "expected 'line' or 'transformer'");
        }
        br.series_admittance = r.pair("series_admittance", {0.0, 0.0});
        br.charging_b = r.number("charging_b", 0.0);
        const Complex tap = r.pair("tap", {1.0, 0.0});  // [ratio, shift in degrees]
        br.tap = std::polar(tap.real(), tap.imag() * kDeg);
        if (tap.imag() == 0.0) br.tap = Complex(tap.real(), 0.0);
        br.angle_limit = r.number("angle_limit", 30.0) * kDeg;
        br.thermal_rating = r.number("thermal_rating");
        br.status = r.boolean("status", true);
        br.series_compensated = r.boolean("series_compensated", false);
        br.dc_resistance = r.maybe_number("dc_resistance");
        if (r.has("xfmr_config")) br.xfmr_config = read_xfmr(r.child("xfmr_config"));
        net.branches.push_back(std::move(br));
    });

    for_each_entry(doc, "gen", [&](const Reader& r) {
        Generator g;
        g.id = r.integer("id");
        g.bus = r.integer("bus");
        g.pmin = r.number("pmin", 0.0);
        g.pmax = r.number("pmax");
        g.qmin = r.number("qmin");
        g.qmax = r.number("qmax");
        g.ramp_rate = r.number("ramp_rate", 0.0);
        g.status = r.boolean("status", true);
        net.generators.push_back(g);
    });

    for_each_entry(doc, "load", [&](const Reader& r) {
        Load l;
        l.id = r.integer("id");
        l.bus = r.integer("bus");
        l.pd = r.number("pd");
        l.qd = r.number("qd", 0.0);
        l.status = r.boolean("status", true);
        net.loads.push_back(l);
    });

    for_each_entry(doc, "substation", [&](const Reader& r) {
        Substation s;
        s.id = r.integer("id");
        s.lat = r.number("lat");
        s.lon = r.number("lon");
        s.grounding_resistance = r.number("grounding_resistance");
        s.buses = r.int_list("buses");
        net.substations.push_back(std::move(s));
    });

    for_each_entry(doc, "relay", [&](const Reader& r) {
        RelaySpec rs;
        rs.branch = r.integer("branch");
        rs.pickup_ratio = r.number("pickup_ratio", 1.0);
        rs.trip_threshold = r.number("trip_threshold", 600.0);
        rs.enabled = r.boolean("enabled", true);
        net.relays.push_back(rs);
    });

    validate(net);
    return net;
}

NetworkCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseParseError("cannot open case file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_case(ss.str());
    } catch (const CaseParseError& e) {
        throw CaseParseError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::string serialize_case(const NetworkCase& net) {
    json doc;
    doc["base_mva"] = net.base_mva;

    json buses = json::array();
    for (const auto& b : net.buses) {
        buses.push_back({{"id", b.id},
                         {"name", b.name},
                         {"base_kv", b.base_kv},
                         {"vmin", b.vmin},
                         {"vmax", b.vmax},
                         {"lat", b.lat},
                         {"lon", b.lon},
                         {"status", b.status},
                         {"is_reference", b.is_reference},
                         {"shunt_admittance", to_pair(b.shunt_admittance)}});
    }
    doc["bus"] = std::move(buses);

    json branches = json::array();
    for (const auto& br : net.branches) {
        json j = {{"id", br.id},
                  {"from_bus", br.from_bus},
                  {"to_bus", br.to_bus},
                  {"kind", br.kind == BranchKind::line ? "line" : "transformer"},
                  {"series_admittance", to_pair(br.series_admittance)},
                  {"charging_b", br.charging_b},
                  {"tap", json::array({std::abs(br.tap), std::arg(br.tap) / kDeg})},
                  {"angle_limit", br.angle_limit / kDeg},
                  {"thermal_rating", br.thermal_rating},
                  {"status", br.status},
                  {"series_compensated", br.series_compensated}};
        if (br.dc_resistance) j["dc_resistance"] = *br.dc_resistance;
        if (br.xfmr_config) {
            const auto& x = *br.xfmr_config;
            json w = json::object();
            const auto& wr = x.winding_resistances;
            if (wr.high) w["high"] = *wr.high;
            if (wr.low) w["low"] = *wr.low;
            if (wr.series) w["series"] = *wr.series;
            if (wr.common) w["common"] = *wr.common;
            if (wr.tertiary) w["tertiary"] = *wr.tertiary;
            json xj = {{"config", to_string(x.config)},
                       {"alpha", x.alpha},
                       {"k_loss", x.k_loss},
                       {"rated_power", x.rated_power},
                       {"winding_resistances", std::move(w)}};
            if (x.beta) xj["beta"] = *x.beta;
            if (x.grounded_substation) xj["grounded_substation"] = *x.grounded_substation;
            if (x.tertiary_bus) xj["tertiary_bus"] = *x.tertiary_bus;
            j["xfmr_config"] = std::move(xj);
        }
        branches.push_back(std::move(j));
    }
    doc["branch"] = std::move(branches);

    json gens = json::array();
    for (const auto& g : net.generators) {
        gens.push_back({{"id", g.id},
                        {"bus", g.bus},
                        {"pmin", g.pmin},
                        {"pmax", g.pmax},
                        {"qmin", g.qmin},
                        {"qmax", g.qmax},
                        {"ramp_rate", g.ramp_rate},
                        {"status", g.status}});
    }
    doc["gen"] = std::move(gens);

    json loads = json::array();
    for (const auto& l : net.loads) {
        loads.push_back({{"id", l.id}, {"bus", l.bus}, {"pd", l.pd}, {"qd", l.qd}, {"status", l.status}});
    }
    doc["load"] = std::move(loads);

    json subs = json::array();
    for (const auto& s : net.substations) {
        subs.push_back({{"id", s.id},
                        {"lat", s.lat},
                        {"lon", s.lon},
                        {"grounding_resistance", s.grounding_resistance},
                        {"buses", s.buses}});
    }
    doc["substation"] = std::move(subs);

    json relays = json::array();
    for (const auto& r : net.relays) {
        relays.push_back({{"branch", r.branch},
                          {"pickup_ratio", r.pickup_ratio},
                          {"trip_threshold", r.trip_threshold},
                          {"enabled", r.enabled}});
    }
    doc["relay"] = std::move(relays);

    return doc.dump(1) + "\n";
}

void save_case(const NetworkCase& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write case file: " + path);
    out << serialize_case(net);
}

}  // namespace gmdcascade
