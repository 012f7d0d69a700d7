#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "gmdcascade/netmodel.hpp"

#include <cmath>

using namespace gmdcascade;
using gmdtest::bus;
using gmdtest::gen;
using gmdtest::line;
using gmdtest::load;

namespace {

NetworkCase three_gen_case() {
    NetworkCase net;
    for (int i = 1; i <= 4; ++i) net.buses.push_back(bus(i));
    net.buses[0].is_reference = true;
    net.branches = {line(1, 1, 2), line(2, 2, 3), line(3, 3, 4)};
    net.generators = {gen(1, 1, 100.0), gen(2, 2, 80.0), gen(3, 3, 60.0)};
    net.loads = {load(1, 4, 150.0, 20.0)};
    return net;
}

}  // namespace

TEST_CASE("demo case loads with expected entity counts", "[netmodel]") {
    const NetworkCase net = load_case(gmdtest::data_path("demo4.json"));
    CHECK(net.buses.size() == 4);
    CHECK(net.branches.size() == 3);
    CHECK(net.substations.size() == 1);
    CHECK(net.branch(3).is_transformer());
    CHECK(net.branch(1).angle_limit == Catch::Approx(30.0 * std::numbers::pi / 180.0));
}

TEST_CASE("empty bus list is rejected", "[netmodel]") {
    CHECK_THROWS_WITH(parse_case(R"({"base_mva": 100, "bus": []})"), Catch::Matchers::ContainsSubstring("no buses"));
}

TEST_CASE("dangling bus reference names the bus", "[netmodel]") {
    NetworkCase net = three_gen_case();
    net.branches.push_back(line(9, 1, 99));
    CHECK_THROWS_WITH(validate(net), Catch::Matchers::ContainsSubstring("bus 99"));
}

TEST_CASE("parse errors carry location and field context", "[netmodel]") {
    CHECK_THROWS_WITH(parse_case("{\n  \"bus\": [ 1,\n"), Catch::Matchers::ContainsSubstring("line"));
    const std::string bad = R"({"bus":[{"id":1,"base_kv":"x","vmin":0.9,"vmax":1.1,"lat":0,"lon":0}]})";
    CHECK_THROWS_WITH(parse_case(bad), Catch::Matchers::ContainsSubstring("bus[0].base_kv"));
}

TEST_CASE("validation catches malformed entities", "[netmodel]") {
    NetworkCase net = three_gen_case();
    SECTION("duplicate ids") {
        net.buses.push_back(bus(2));
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
    SECTION("inverted voltage band") {
        net.buses[1].vmax = 0.8;
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
    SECTION("generator limits") {
        net.generators[0].pmin = 200.0;
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
    SECTION("line with tap") {
        net.branches[0].tap = {1.05, 0.0};
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
    SECTION("relay on unknown branch") {
        net.relays.push_back(RelaySpec{42, 1.0, 600.0, true});
        CHECK_THROWS_WITH(validate(net), Catch::Matchers::ContainsSubstring("branch 42"));
    }
}

TEST_CASE("GSU augmentation adds one bus and transformer per generator", "[netmodel]") {
    const NetworkCase net = three_gen_case();
    const NetworkCase aug = attach_gsu_transformers(net);
    CHECK(aug.buses.size() == net.buses.size() + 3);
    CHECK(aug.branches.size() == net.branches.size() + 3);
    int gsu = 0;
    for (const auto& br : aug.branches) {
        if (br.xfmr_config && br.xfmr_config->config == XfmrConfig::gwye_delta_gsu) ++gsu;
    }
    CHECK(gsu == 3);
    for (const auto& g : aug.generators) {
        // Generator now sits on a bus that is not part of the original network.
        CHECK(g.bus > 4);
        CHECK(aug.bus(g.bus).base_kv < aug.bus(1).base_kv);
    }
    CHECK(total_load_mw(aug) == total_load_mw(net));
    CHECK(total_pmax_mw(aug) == total_pmax_mw(net));
    CHECK_NOTHROW(validate(aug));

    const NetworkCase again = attach_gsu_transformers(aug);
    CHECK(serialize_case(again) == serialize_case(aug));
}

TEST_CASE("GSU augmentation without generators is a no-op", "[netmodel]") {
    NetworkCase net = three_gen_case();
    net.generators.clear();
    CHECK(serialize_case(attach_gsu_transformers(net)) == serialize_case(net));
}

TEST_CASE("contingencies disable exactly the listed elements", "[netmodel]") {
    NetworkCase net;
    for (int i = 1; i <= 10; ++i) net.buses.push_back(bus(i));
    for (int i = 1; i <= 9; ++i) net.branches.push_back(line(i, i, i + 1));
    net.loads = {load(1, 3, 100.0, 10.0), load(2, 5, 40.0, 4.0)};

    ContingencySpec spec;
    spec.bus_outages = {1, 2, 3, 4, 5, 6, 7};
    spec.branch_outages = {1, 3, 5, 7, 9};
    spec.load_scale = 1.5;
    const NetworkCase out = apply_contingencies(net, spec);

    int buses_off = 0, branches_off = 0;
    for (const auto& b : out.buses) buses_off += b.status ? 0 : 1;
    for (const auto& br : out.branches) branches_off += br.status ? 0 : 1;
    CHECK(buses_off == 7);
    CHECK(branches_off == 5);
    CHECK(out.loads[0].pd == Catch::Approx(150.0));
    CHECK(out.loads[1].qd == Catch::Approx(6.0));

    CHECK(serialize_case(apply_contingencies(net, {})) == serialize_case(net));
    CHECK_THROWS_AS(apply_contingencies(net, {{77}, {}, 1.0}), ValidationError);
    CHECK_THROWS_AS(apply_contingencies(net, {{}, {77}, 1.0}), ValidationError);
}

TEST_CASE("serialization round trips", "[netmodel]") {
    NetworkCase net = attach_gsu_transformers(load_case(gmdtest::data_path("demo4.json")));
    net.branches[0].tap = {1.0, 0.0};
    net.branches[2].tap = std::polar(1.02, 0.05);
    net.relays.push_back(RelaySpec{1, 1.1, 300.0, true});
    const std::string text = serialize_case(net);
    const NetworkCase back = parse_case(text);
    CHECK(serialize_case(back) == text);
    CHECK(back.branch(3).tap.real() == Catch::Approx(net.branch(3).tap.real()));
    CHECK(back.branch(3).tap.imag() == Catch::Approx(net.branch(3).tap.imag()));
}

TEST_CASE("branch service status follows terminal buses", "[netmodel]") {
    NetworkCase net = three_gen_case();
    net.buses[2].status = false;
    const CaseIndex idx = net.index();
    CHECK(branch_in_service(net, idx, net.branches[0]));
    CHECK_FALSE(branch_in_service(net, idx, net.branches[1]));
}
