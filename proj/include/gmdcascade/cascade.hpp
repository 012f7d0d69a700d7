#pragma once

// Time-stepped GMD cascade. Each iteration updates generator ramp windows,
// opens generator and load breakers, keeps only the largest island, solves
// the GIC network for the current coupled voltages, runs the cascading
// load-shed program with the resulting transformer losses, and advances the
// branch overcurrent relays.

#include "gmdcascade/conic.hpp"
#include "gmdcascade/coupling.hpp"
#include "gmdcascade/gicsolve.hpp"
#include "gmdcascade/mls.hpp"
#include "gmdcascade/netmodel.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmdcascade {

/// Invalid configuration or an unsolvable starting point.
class CascadeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CascadeConfig {
    double dt = 300.0;              // seconds per iteration
    double horizon = 3600.0;        // seconds
    double pickup_ratio = 1.0;      // relay default
    double trip_threshold = 600.0;  // relay default, seconds
    double solver_tol = 1e-6;
    int verbosity = 0;              // > 0: one progress line per iteration on stderr
    conic::SolverSettings solver;   // tol is taken from solver_tol
};

struct RelayState {
    int branch = 0;
    double integrator = 0.0;  // seconds of accumulated overload
    bool tripped = false;
};

enum class Termination { horizon_elapsed, total_blackout, solver_failure };
[[nodiscard]] const char* to_string(Termination t);

struct IterationRecord {
    int iteration = 0;
    double time = 0.0;          // seconds
    double mean_abs_vdc = 0.0;  // over in-service lines, volts
    double max_abs_vdc = 0.0;
    double generation_mw = 0.0;
    int online_branches = 0;
    double served_mw = 0.0;
    int island_buses = 0;
    int trips = 0;
};

enum class EventKind {
    trip,
    generator_breaker,
    island_removed,
    bus_deenergized,
    reference_moved,
    blackout,
    solver_retry,
    solver_failure,
};
[[nodiscard]] const char* to_string(EventKind k);

struct CascadeEvent {
    int iteration = 0;
    double time = 0.0;
    EventKind kind = EventKind::trip;
    int element = 0;     // branch, generator or bus id
    std::string detail;  // free text without newlines
};

struct CascadeTrace {
    double dt = 0.0;
    std::vector<IterationRecord> records;
    std::vector<CascadeEvent> events;
    Termination termination = Termination::horizon_elapsed;
    std::string message;  // solver failure detail

    std::vector<int> tripped_branches;
    std::vector<int> disabled_generators;
};

/// Loop state carried between iterations.
struct CascadeState {
    int iteration = 0;
    double time = 0.0;
    NetworkCase net;                       // statuses evolve
    std::map<int, double> gen_p;           // previous dispatch, MW
    std::map<int, RampBounds> gen_bounds;  // MW
    std::map<int, double> load_p, load_q;  // setpoints, MW / MVar
    std::map<int, RelayState> relays;      // by branch id
    std::vector<int> island;               // buses of the active component
};

/// Ramp window around p_prev intersected with the unit's [pmin, pmax]. An
/// empty intersection collapses to the base bound nearest the window.
[[nodiscard]] RampBounds ramp_bounds(const Generator& g, double p_prev, double dt);
void update_generator_ramp(CascadeState& state, const CascadeConfig& cfg);

/// Disables every in-service generator whose previous output is strictly
/// below its base-case pmin. Returns the ids in case order.
std::vector<int> update_generator_breakers(CascadeState& state);

/// Load setpoints become the previously served powers (never increased);
/// loads that were not served are set to zero.
void update_load_breakers(CascadeState& state, const MlsSolution& previous);

struct IslandSelection {
    std::vector<int> kept;                  // sorted bus ids
    std::vector<std::vector<int>> removed;  // each sorted
};

/// Keeps the connected component with the most in-service buses (ties go to
/// the component holding the lowest bus id) and disables every other bus.
IslandSelection select_largest_island(NetworkCase& net);

/// Relay loading: ac apparent-power loading combined in quadrature with the
/// per-phase dc current relative to the rated current.
[[nodiscard]] double relay_loading(double s_mva, double rating_mva, double i_dc_phase, double i_rated);

/// Rated per-phase current of a branch, amperes.
[[nodiscard]] double rated_current(const NetworkCase& net, const Branch& br);

/// Integrates each relay over dt with its branch loading and opens the
/// branches whose integrator reaches the trip threshold. Branches without an
/// entry in `loading` are left untouched. Returns tripped ids.
std::vector<int> update_relays(CascadeState& state, const std::map<int, double>& loading, const CascadeConfig& cfg);

/// Runs the cascade. Iteration 0 is the steady-state load-shed solve with no
/// induced voltage; iteration k >= 1 uses the scenario sample at time k * dt
/// (held at the last sample when the series is shorter).
[[nodiscard]] CascadeTrace run_cascade(const NetworkCase& net, const BranchVoltageSet& scenario,
                                       const CascadeConfig& cfg);

// Output documents.
[[nodiscard]] std::string format_trace(const CascadeTrace& trace);
[[nodiscard]] std::string format_events(const CascadeTrace& trace);
[[nodiscard]] std::string format_summary(const CascadeTrace& trace);

[[nodiscard]] std::vector<IterationRecord> parse_trace(const std::string& text);
[[nodiscard]] std::vector<CascadeEvent> parse_events(const std::string& text);

/// Writes trace.txt, events.txt and summary.json into dir.
void write_cascade_outputs(const CascadeTrace& trace, const std::string& dir);

}  // namespace gmdcascade
