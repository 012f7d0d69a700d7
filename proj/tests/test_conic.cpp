#include <catch_amalgamated.hpp>

#include "gmdcascade/conic.hpp"
#include "lp_oracle.hpp"

#include <cmath>
#include <random>

using namespace gmdcascade::conic;
using Catch::Approx;

TEST_CASE("cone projection minimum", "[conic]") {
    // minimize x subject to ||(3, 4)|| <= x
    ConicProgram p;
    const int x = p.add_variable();
    p.set_objective_coefficient(x, 1.0);
    p.add_soc({LinearExpr(3.0), LinearExpr(4.0)}, LinearExpr::var(x));
    const auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == Approx(5.0).margin(1e-6));
    CHECK(sol.max_cone_violation <= 1e-6);
}

TEST_CASE("pure LP vertex", "[conic]") {
    ConicProgram p;
    const int x = p.add_variable(0.0);
    const int y = p.add_variable(0.0);
    p.set_objective_coefficient(x, -1.0);
    p.set_objective_coefficient(y, -1.0);
    p.add_inequality(LinearExpr({{x, 1.0}, {y, 1.0}}), 1.0);
    const auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == Approx(-1.0).margin(1e-6));
}

TEST_CASE("rotated cone AM-GM", "[conic]") {
    // min u + v s.t. u v >= 1
    ConicProgram p;
    const int u = p.add_variable();
    const int v = p.add_variable();
    p.set_objective_coefficient(u, 1.0);
    p.set_objective_coefficient(v, 1.0);
    p.add_rotated_soc(LinearExpr::var(u), LinearExpr::var(v), {LinearExpr(1.0)});
    const auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::optimal);

    // Grid-scan oracle over u in (0, 4]: best u + 1/u.
    double best = 1e300;
    for (int k = 1; k <= 40000; ++k) {
        const double uu = 4.0 * k / 40000.0;
        best = std::min(best, uu + 1.0 / uu);
    }
    CHECK(sol.objective == Approx(best).margin(1e-5));
    CHECK(sol.x[static_cast<std::size_t>(u)] == Approx(1.0).margin(1e-3));
    CHECK(sol.x[static_cast<std::size_t>(v)] == Approx(1.0).margin(1e-3));
}

TEST_CASE("contradictory bounds are infeasible", "[conic]") {
    ConicProgram p;
    const int x = p.add_variable();
    p.add_bounds(x, 1.0, kInf);
    p.add_bounds(x, -kInf, 0.0);
    const auto sol = solve(p);
    CHECK(sol.status == SolveStatus::infeasible);
}

TEST_CASE("unbounded objective is reported", "[conic]") {
    ConicProgram p;
    const int x = p.add_variable(0.0);
    p.set_objective_coefficient(x, -1.0);
    const auto sol = solve(p);
    CHECK(sol.status == SolveStatus::unbounded);
}

TEST_CASE("constraint ids are consecutive", "[conic]") {
    ConicProgram p;
    const int x = p.add_variable();
    CHECK(p.add_equality(LinearExpr::var(x), 1.0) == 0);
    CHECK(p.add_inequality(LinearExpr::var(x), 2.0) == 1);
    CHECK(p.add_bounds(x, -3.0, 3.0) == 2);
    CHECK(p.add_soc({LinearExpr::var(x)}, LinearExpr(5.0)) == 3);
}

TEST_CASE("builders reject unknown variables", "[conic]") {
    ConicProgram p;
    p.add_variable();
    CHECK_THROWS_AS(p.add_equality(LinearExpr::var(3), 1.0), std::out_of_range);
    CHECK_THROWS_AS(p.add_bounds(-1, 0.0, 1.0), std::out_of_range);
    CHECK_THROWS_AS(p.add_soc({}, LinearExpr(1.0)), std::invalid_argument);
}

TEST_CASE("empty program has zero objective", "[conic]") {
    ConicProgram p;
    const auto sol = solve(p);
    CHECK(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == 0.0);
}

TEST_CASE("duplicate constraints leave the optimum unchanged", "[conic]") {
    auto build = [](bool dup) {
        ConicProgram p;
        const int x = p.add_variable(0.0);
        const int y = p.add_variable(0.0);
        p.set_objective_coefficient(x, -2.0);
        p.set_objective_coefficient(y, -1.0);
        p.add_inequality(LinearExpr({{x, 1.0}, {y, 1.0}}), 4.0);
        p.add_inequality(LinearExpr({{x, 1.0}, {y, 3.0}}), 6.0);
        p.add_inequality(LinearExpr({{x, 1.0}}), 3.0);
        if (dup) {
            p.add_inequality(LinearExpr({{x, 1.0}, {y, 1.0}}), 4.0);
            p.add_inequality(LinearExpr({{x, 1.0}}), 3.0);
        }
        return solve(p);
    };
    const auto a = build(false);
    const auto b = build(true);
    REQUIRE(a.status == SolveStatus::optimal);
    REQUIRE(b.status == SolveStatus::optimal);
    CHECK(a.objective == Approx(-7.0).margin(1e-6));
    CHECK(b.objective == Approx(a.objective).margin(1e-6));
}

TEST_CASE("equality constrained SOC", "[conic]") {
    // min t s.t. ||(x - 1, y - 2)|| <= t, x + y = 0  ->  distance from (1,2) to the line = 3/sqrt(2)
    ConicProgram p;
    const int x = p.add_variable();
    const int y = p.add_variable();
    const int t = p.add_variable();
    p.set_objective_coefficient(t, 1.0);
    p.add_equality(LinearExpr({{x, 1.0}, {y, 1.0}}), 0.0);
    p.add_soc({LinearExpr({{x, 1.0}}, -1.0), LinearExpr({{y, 1.0}}, -2.0)}, LinearExpr::var(t));
    const auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == Approx(3.0 / std::sqrt(2.0)).margin(1e-6));
}

TEST_CASE("random LPs match vertex enumeration", "[conic][property]") {
    std::mt19937 rng(1234);
    for (int trial = 0; trial < 40; ++trial) {
        const auto lp = gmdtest::random_bounded_lp(rng, 2 + trial % 5, 3 + trial % 4);
        const double oracle = gmdtest::vertex_enumeration_min(lp);
        const auto sol = solve(gmdtest::to_program(lp));
        INFO("trial " << trial);
        REQUIRE(sol.status == SolveStatus::optimal);
        CHECK(sol.objective == Approx(oracle).margin(1e-6));
        const auto a = audit(gmdtest::to_program(lp), sol.x);
        CHECK(a.max_primal_residual <= 1e-6);
    }
}

TEST_CASE("both solver methods agree", "[conic][property]") {
    std::mt19937 rng(77);
    SolverSettings splitting;
    splitting.method = SolverMethod::operator_splitting;
    for (int trial = 0; trial < 15; ++trial) {
        const auto lp = gmdtest::random_bounded_lp(rng, 2 + trial % 4, 2 + trial % 3);
        const auto prog = gmdtest::to_program(lp);
        const auto ipm = solve(prog);
        const auto admm = solve(prog, splitting);
        INFO("trial " << trial);
        REQUIRE(ipm.status == SolveStatus::optimal);
        REQUIRE(admm.status == SolveStatus::optimal);
        CHECK(admm.objective == Approx(ipm.objective).margin(1e-5));
    }

    ConicProgram p;
    const int x = p.add_variable();
    const int y = p.add_variable();
    p.set_objective_coefficient(x, 1.0);
    p.set_objective_coefficient(y, 1.0);
    p.add_rotated_soc(LinearExpr::var(x), LinearExpr::var(y), {LinearExpr(1.0)});
    const auto a = solve(p);
    const auto b = solve(p, splitting);
    REQUIRE(a.status == SolveStatus::optimal);
    REQUIRE(b.status == SolveStatus::optimal);
    CHECK(a.objective == Approx(2.0).margin(1e-6));
    CHECK(b.objective == Approx(2.0).margin(1e-5));
}

TEST_CASE("adding a constraint never improves the optimum", "[conic][property]") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        auto lp = gmdtest::random_bounded_lp(rng, 3, 3);
        const auto base = solve(gmdtest::to_program(lp));
        REQUIRE(base.status == SolveStatus::optimal);
        // Extra random cut through the interior point keeps the program feasible.
        std::normal_distribution<double> nd;
        std::vector<double> row(static_cast<std::size_t>(lp.n));
        double lhs = 0.0;
        for (int j = 0; j < lp.n; ++j) {
            row[static_cast<std::size_t>(j)] = nd(rng);
            lhs += row[static_cast<std::size_t>(j)] * lp.interior[static_cast<std::size_t>(j)];
        }
        lp.G.push_back(row);
        lp.h.push_back(lhs + 0.1);
        const auto cut = solve(gmdtest::to_program(lp));
        REQUIRE(cut.status == SolveStatus::optimal);
        CHECK(cut.objective >= base.objective - 2e-6 * (1.0 + std::abs(base.objective)));
        CHECK(audit(gmdtest::to_program(lp), cut.x).max_primal_residual <= 1e-6);
    }
}

TEST_CASE("pluggable backend is used when set", "[conic]") {
    ConicProgram p;
    p.add_variable();
    SolverSettings s;
    bool called = false;
    s.backend = [&](const ConicProgram& prog, const SolverSettings&) {
        called = true;
        ConicSolution out;
        out.status = SolveStatus::optimal;
        out.x.assign(static_cast<std::size_t>(prog.num_variables()), 0.0);
        return out;
    };
    const auto sol = solve(p, s);
    CHECK(called);
    CHECK(sol.status == SolveStatus::optimal);
}

TEST_CASE("program dump lists cone sizes", "[conic]") {
    ConicProgram p;
    const int x = p.add_variable(0.0, 1.0);
    p.add_soc({LinearExpr::var(x)}, LinearExpr(2.0));
    const std::string dump = format_program(p);
    CHECK(dump.find("# soc 2") != std::string::npos);
    CHECK(dump.find("# nonneg 2") != std::string::npos);
}
