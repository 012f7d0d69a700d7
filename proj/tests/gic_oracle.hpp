#pragma once

// Test-only GIC oracles: dense nodal solve, random meshes and a hand-analysable loop.

#include "fixtures.hpp"
#include "gmdcascade/gicsolve.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace gmdtest {

using namespace gmdcascade;

// Node voltages from a dense solve of the grounded nodal system.
inline std::vector<double> dense_node_voltages(const GicNetwork& net, const std::vector<double>& emf) {
    const auto n = static_cast<Eigen::Index>(net.nodes.size());
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd J = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const auto& b = net.branches[k];
        const auto f = static_cast<Eigen::Index>(b.from), t = static_cast<Eigen::Index>(b.to);
        G(f, f) += b.conductance;
        G(t, t) += b.conductance;
        G(f, t) -= b.conductance;
        G(t, f) -= b.conductance;
        J[f] -= b.conductance * emf[k];
        J[t] += b.conductance * emf[k];
    }
    const auto gnd = static_cast<Eigen::Index>(net.ground);
    G.row(gnd).setZero();
    G.col(gnd).setZero();
    G(gnd, gnd) = 1.0;
    J[gnd] = 0.0;
    const Eigen::VectorXd v = G.fullPivLu().solve(J);
    return {v.data(), v.data() + n};
}

// Random connected network on up to 8 nodes with at least one ground tie.
inline GicNetwork random_mesh(std::mt19937& rng, int nodes) {
    std::uniform_real_distribution<double> g(0.2, 5.0);
    std::uniform_int_distribution<int> pick(0, nodes - 1);
    GicNetwork net;
    for (int i = 0; i < nodes; ++i) net.add_node(DcNodeKind::bus, i);
    net.ground = net.add_node(DcNodeKind::ground);
    for (int i = 1; i < nodes; ++i) {
        std::uniform_int_distribution<int> prev(0, i - 1);
        net.add_branch(static_cast<std::size_t>(prev(rng)), static_cast<std::size_t>(i), g(rng));
    }
    for (int e = 0; e < nodes; ++e) {
        const int a = pick(rng), b = pick(rng);
        if (a != b) net.add_branch(static_cast<std::size_t>(a), static_cast<std::size_t>(b), g(rng));
    }
    net.add_branch(static_cast<std::size_t>(pick(rng)), net.ground, g(rng), DcBranchRole::grounding);
    net.add_branch(static_cast<std::size_t>(pick(rng)), net.ground, g(rng), DcBranchRole::grounding);
    return net;
}

inline std::vector<double> random_emf(std::mt19937& rng, const GicNetwork& net) {
    std::uniform_real_distribution<double> v(-200.0, 200.0);
    std::vector<double> emf(net.branches.size(), 0.0);
    for (std::size_t k = 0; k < emf.size(); ++k) {
        if (net.branches[k].role == DcBranchRole::line) emf[k] = v(rng);
    }
    return emf;
}

// Two substations joined by one line; each bus grounds through a GSU winding.
inline NetworkCase loop_case(double line_ohms, double winding_ohms, double ground_ohms) {
    NetworkCase net;
    net.buses = {bus(1, 345), bus(2, 345), bus(3, 22), bus(4, 22)};
    net.branches = {line(1, 1, 2), transformer(2, 1, 3, XfmrConfig::gwye_delta_gsu),
                    transformer(3, 2, 4, XfmrConfig::gwye_delta_gsu)};
    net.branches[0].dc_resistance = line_ohms;
    net.branches[1].xfmr_config->winding_resistances.high = winding_ohms;
    net.branches[2].xfmr_config->winding_resistances.high = winding_ohms;
    net.substations = {substation(1, {1, 3}, ground_ohms), substation(2, {2, 4}, ground_ohms)};
    return net;
}

}  // namespace gmdtest
