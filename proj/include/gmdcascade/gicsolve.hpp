#pragma once

// Quasi-dc GIC network: construction from a NetworkCase, nodal solve,
// transformer effective GIC and reactive loss.

#include "gmdcascade/netmodel.hpp"

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmdcascade {

class GicError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DcNodeKind { bus, neutral, ground };

struct DcNode {
    DcNodeKind kind = DcNodeKind::bus;
    int ref = 0;  // bus id or substation id; unused for ground
};

enum class DcBranchRole { line, winding_high, winding_low, winding_series, winding_common, winding_tertiary, grounding };

struct DcBranch {
    std::size_t from = 0;
    std::size_t to = 0;
    double conductance = 0.0;  // siemens, three phases lumped
    DcBranchRole role = DcBranchRole::line;
    int ac_branch = -1;  // owning ac branch id, or substation id for grounding
};

/// Indices of the dc branches modelling one transformer's windings.
struct TransformerWindings {
    int branch = 0;
    std::optional<std::size_t> high, low, series, common, tertiary;
};

struct GicNetwork {
    std::vector<DcNode> nodes;
    std::vector<DcBranch> branches;
    std::size_t ground = 0;
    std::map<int, std::size_t> line_branch;  // ac line id -> dc branch index
    std::vector<TransformerWindings> transformers;

    /// Appends a node and returns its index.
    std::size_t add_node(DcNodeKind kind, int ref = 0);
    std::size_t add_branch(std::size_t from, std::size_t to, double conductance,
                           DcBranchRole role = DcBranchRole::line, int ac_branch = -1);
};

/// Grounding resistances below this value are treated as this value.
inline constexpr double kMinGroundingOhms = 1e-6;

[[nodiscard]] GicNetwork build_gic_network(const NetworkCase& net);

/// Per-dc-branch emf vector from line voltages keyed by ac branch id.
/// Entries for branches absent from the dc network are ignored.
[[nodiscard]] std::vector<double> emf_vector(const GicNetwork& net, const std::map<int, double>& line_volts);

struct WindingCurrents {
    std::optional<double> high, low, series, common, tertiary;  // amperes
};

struct TransformerGic {
    int branch = 0;
    WindingCurrents windings;
    double i_eff = 0.0;   // amperes
    double q_loss = 0.0;  // per-unit
};

struct GicSolution {
    std::vector<double> node_voltages;    // volts
    std::vector<double> branch_currents;  // amperes, from -> to
    std::vector<TransformerGic> transformers;
    double max_kcl_residual = 0.0;

    [[nodiscard]] const TransformerGic* transformer(int branch) const;
};

struct GicSolveOptions {
    /// Reference floating subnetworks to an arbitrary node instead of failing.
    bool pin_floating = false;
};

/// Nodal solve of G v = J with emfs converted to Norton injections.
/// Transformer entries carry winding currents only; see attach_losses.
[[nodiscard]] GicSolution solve_gic(const GicNetwork& net, std::span<const double> emf,
                                    const GicSolveOptions& opts = {});

[[nodiscard]] double effective_gic(const TransformerGicModel& model, const WindingCurrents& w);
[[nodiscard]] double qloss(const TransformerGicModel& model, double i_eff, double v = 1.0);

/// Fills i_eff and q_loss for every transformer in the solution.
void attach_losses(GicSolution& sol, const NetworkCase& net);

/// Columnar dump of nodes and branches (with emf) for debugging.
[[nodiscard]] std::string format_gic_network(const GicNetwork& net, std::span<const double> emf);

}  // namespace gmdcascade
