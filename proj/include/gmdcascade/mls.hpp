#pragma once

// Minimum-load-shed programs over a second-order-cone relaxation of the ac
// power flow, with GIC reactive losses as fixed withdrawals.
//
// Steady-state mode gives every load and generator its own status variable.
// Cascading mode scales the previous iteration's generator and load setpoints
// by one (z_g, z_d) pair per connected component. Both modes keep a status
// variable per bus; a bus that is switched off drops its voltage to zero and
// takes its loads, generators and transformer losses with it.

#include "gmdcascade/conic.hpp"
#include "gmdcascade/netmodel.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmdcascade {

class MlsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MlsMode { steady_state, cascading };

struct RampBounds {
    double lower = 0.0;  // MW
    double upper = 0.0;  // MW
};

/// Network state handed to the builders. Elements with status = false (and
/// branches with an out-of-service terminal) are left out of the program.
struct MlsSnapshot {
    NetworkCase net;
    std::map<int, double> q_loss;  // transformer branch id -> per-unit reactive loss
    MlsMode mode = MlsMode::steady_state;

    // Cascading mode: previous setpoints (MW, MVar) and ramp-adjusted bounds.
    std::map<int, double> gen_p0;
    std::map<int, RampBounds> gen_bounds;
    std::map<int, double> load_p0;
    std::map<int, double> load_q0;
};

/// Variable layout of a built program.
struct MlsProgram {
    struct BranchVars {
        int wr = -1, wi = -1, p_fr = -1, q_fr = -1, p_to = -1, q_to = -1;
    };
    struct Island {
        int reference_bus = 0;
        std::vector<int> buses;
        int z_g = -1;  // cascading mode only
        int z_d = -1;  // cascading mode only
        double load_mw = 0.0;
    };

    conic::ConicProgram program;
    MlsMode mode = MlsMode::steady_state;
    double base_mva = 100.0;
    std::map<int, int> bus_w, bus_z;
    std::map<int, BranchVars> branch;
    std::map<int, int> gen_p, gen_q;
    std::map<int, int> gen_z;   // steady: own variable; cascading: the island's z_g
    std::map<int, int> load_z;  // steady: own variable; cascading: the island's z_d
    std::vector<Island> islands;
};

[[nodiscard]] MlsProgram build_steady_mls(const MlsSnapshot& snap);
[[nodiscard]] MlsProgram build_cascading_mls(const MlsSnapshot& snap);
/// Dispatches on snap.mode.
[[nodiscard]] MlsProgram build_mls(const MlsSnapshot& snap);

struct BranchFlow {
    double p_fr = 0.0, q_fr = 0.0, p_to = 0.0, q_to = 0.0;  // MW, MVar
    double wr = 0.0, wi = 0.0;

    /// Larger of the two terminal apparent powers, MVA.
    [[nodiscard]] double apparent_mva() const;
};

struct IslandScaling {
    int reference_bus = 0;
    std::vector<int> buses;
    double z_g = 1.0;
    double z_d = 1.0;
};

struct MlsSolution {
    conic::SolveStatus status = conic::SolveStatus::numerical_failure;
    double shed_mw = 0.0;
    double served_mw = 0.0;
    double generation_mw = 0.0;

    std::map<int, double> load_fraction;  // z_d per load
    std::map<int, double> load_p, load_q; // served MW, MVar
    std::map<int, double> gen_status;     // z_g per generator
    std::map<int, double> gen_p, gen_q;   // MW, MVar
    std::map<int, double> bus_status;     // z_i; 0 for buses outside the program
    std::map<int, double> bus_w;          // W_ii; 0 for buses outside the program
    std::map<int, BranchFlow> flows;
    std::vector<IslandScaling> islands;   // cascading mode

    // Residuals re-evaluated on the returned point.
    double max_kcl_residual = 0.0;     // per-unit
    double max_cone_violation = 0.0;   // (Re W_ij)^2 + (Im W_ij)^2 - W_ii W_jj
    double max_status_violation = 0.0; // voltage-status coupling

    int iterations = 0;
    double solve_seconds = 0.0;
};

/// Maps a conic solution back onto the snapshot's components. Non-optimal
/// statuses are passed through with no values filled in.
[[nodiscard]] MlsSolution extract_solution(const MlsProgram& prog, const conic::ConicSolution& sol,
                                           const MlsSnapshot& snap);

[[nodiscard]] MlsSolution solve_mls(const MlsSnapshot& snap, const conic::SolverSettings& settings = {});

/// Sectioned columnar export: [summary], [bus], [load], [gen], [branch].
[[nodiscard]] std::string format_mls_solution(const MlsSolution& sol);

}  // namespace gmdcascade
