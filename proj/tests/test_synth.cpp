#include <catch_amalgamated.hpp>

#include "gmdcascade/cascade.hpp"
#include "gmdcascade/geofield.hpp"
#include "gmdcascade/synth.hpp"

using namespace gmdcascade;

namespace {

NetworkCase make(int buses, std::uint64_t seed) {
    SynthOptions o;
    o.buses = buses;
    o.seed = seed;
    return synthesize_case(o);
}

}  // namespace

TEST_CASE("synthetic case has the requested bus count", "[synth]") {
    for (int n : {2, 3, 4, 10, 57, 169}) {
        const NetworkCase net = make(n, 7);
        CHECK(static_cast<int>(net.buses.size()) == n);
        CHECK_NOTHROW(validate(net));
    }
}

TEST_CASE("same seed gives byte-identical files", "[synth]") {
    const std::string a = serialize_case(make(169, 42));
    const std::string b = serialize_case(make(169, 42));
    CHECK(a == b);
    CHECK(serialize_case(make(169, 43)) != a);
    CHECK(serialize_case(parse_case(a)) == a);
}

TEST_CASE("every generator sits behind a step-up transformer", "[synth]") {
    const NetworkCase net = make(169, 1);
    const NetworkCase again = attach_gsu_transformers(net);
    CHECK(again.buses.size() == net.buses.size());
    int gsus = 0;
    for (const auto& br : net.branches) {
        if (br.xfmr_config && br.xfmr_config->config == XfmrConfig::gwye_delta_gsu) ++gsus;
    }
    CHECK(gsus == static_cast<int>(net.generators.size()));
    CHECK(total_load_mw(net) < total_pmax_mw(net));
}

TEST_CASE("lines average tens of kilometres", "[synth]") {
    const NetworkCase net = make(169, 1);
    double total = 0.0;
    int lines = 0;
    for (const auto& br : net.branches) {
        if (br.is_transformer()) continue;
        const Bus& a = net.bus(br.from_bus);
        const Bus& b = net.bus(br.to_bus);
        total += great_circle_km(a.lat, a.lon, b.lat, b.lon);
        ++lines;
    }
    REQUIRE(lines > 0);
    const double mean = total / lines;
    CHECK(mean > 20.0);
    CHECK(mean < 90.0);
}

TEST_CASE("minimal synthetic case runs a cascade", "[synth]") {
    const NetworkCase net = make(4, 3);
    const CascadeTrace tr = run_cascade(net, {}, {});
    CHECK(tr.termination == Termination::horizon_elapsed);
    CHECK(tr.records.front().served_mw > 0.0);
}

TEST_CASE("fewer than two buses is rejected", "[synth]") {
    CHECK_THROWS_AS(make(1, 1), std::invalid_argument);
    CHECK_THROWS_AS(make(0, 1), std::invalid_argument);
}
