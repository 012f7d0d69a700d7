#pragma once

// Joint ac/dc network data model: buses, branches (lines and transformers),
// generators, loads, substations and relay parameters. All ac quantities are
// per-unit on base_mva; all dc/GIC quantities are SI (volts, amperes, ohms).

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace gmdcascade {

using Complex = std::complex<double>;

/// Raised when a case document cannot be parsed (syntax or type errors).
class CaseParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a parsed case violates a model invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BranchKind { line, transformer };

enum class XfmrConfig {
    delta_delta,
    gwye_delta_gsu,
    gwye_gwye,
    gwye_gwye_auto,
    gwye_three_winding,
};

[[nodiscard]] const char* to_string(XfmrConfig config);
[[nodiscard]] std::optional<XfmrConfig> xfmr_config_from_string(const std::string& name);

/// Per-phase dc winding resistances in ohms. Which entries are required
/// depends on the transformer configuration.
struct WindingResistances {
    std::optional<double> high;
    std::optional<double> low;
    std::optional<double> series;
    std::optional<double> common;
    std::optional<double> tertiary;
};

struct TransformerGicModel {
    XfmrConfig config = XfmrConfig::gwye_gwye;
    double alpha = 1.0;               // turns ratio (high / low)
    std::optional<double> beta;       // tertiary ratio, three-winding only
    double k_loss = 0.0;              // reactive loss constant
    double rated_power = 100.0;       // MVA
    WindingResistances winding_resistances;
    std::optional<int> grounded_substation;
    std::optional<int> tertiary_bus;  // only for a grounded tertiary winding
};

struct Bus {
    int id = 0;
    std::string name;
    double base_kv = 1.0;
    double vmin = 0.9;
    double vmax = 1.1;
    double lat = 0.0;
    double lon = 0.0;
    bool status = true;
    bool is_reference = false;
    Complex shunt_admittance{0.0, 0.0};
};

struct Branch {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    BranchKind kind = BranchKind::line;
    Complex series_admittance{0.0, 0.0};
    double charging_b = 0.0;
    Complex tap{1.0, 0.0};       // ratio * exp(j * shift)
    double angle_limit = 0.0;    // radians
    double thermal_rating = 0.0; // MVA
    bool status = true;
    bool series_compensated = false;
    std::optional<double> dc_resistance;  // ohms per phase, overrides the ac-derived value
    std::optional<TransformerGicModel> xfmr_config;

    [[nodiscard]] bool is_transformer() const { return kind == BranchKind::transformer; }
};

struct Generator {
    int id = 0;
    int bus = 0;
    double pmin = 0.0;
    double pmax = 0.0;
    double qmin = 0.0;
    double qmax = 0.0;
    double ramp_rate = 0.0;  // MW per minute
    bool status = true;
};

struct Load {
    int id = 0;
    int bus = 0;
    double pd = 0.0;  // MW
    double qd = 0.0;  // MVar
    bool status = true;
};

struct Substation {
    int id = 0;
    double lat = 0.0;
    double lon = 0.0;
    double grounding_resistance = 0.0;  // ohms
    std::vector<int> buses;
};

struct RelaySpec {
    int branch = 0;
    double pickup_ratio = 1.0;
    double trip_threshold = 600.0;  // seconds
    bool enabled = true;
};

/// Id -> position lookups for a case. Rebuilt whenever a case is modified.
struct CaseIndex {
    std::unordered_map<int, std::size_t> bus;
    std::unordered_map<int, std::size_t> branch;
    std::unordered_map<int, std::size_t> gen;
    std::unordered_map<int, std::size_t> load;
    std::unordered_map<int, std::size_t> substation;
    std::unordered_map<int, std::size_t> relay;        // keyed by branch id
    std::unordered_map<int, int> bus_substation;       // bus id -> substation id
};

struct NetworkCase {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    std::vector<Substation> substations;
    std::vector<RelaySpec> relays;

    [[nodiscard]] CaseIndex index() const;

    [[nodiscard]] const Bus& bus(int id) const;
    [[nodiscard]] const Branch& branch(int id) const;
};

/// Checks every invariant of the model; throws ValidationError naming the
/// violated rule and the offending id.
void validate(const NetworkCase& net);

/// Parameters for generator step-up transformers inserted by
/// attach_gsu_transformers.
struct GsuDefaults {
    double winding_resistance = 0.1;   // ohms per phase, gwye side
    double k_loss = 1.8;
    double generator_kv = 22.0;
    double reactance = 0.1;            // per-unit on the transformer rating
    double resistance = 0.002;         // per-unit on the transformer rating
    double grounding_resistance = 0.2; // used when a new substation is created
};

/// Inserts a generator bus and a gwye-delta GSU transformer for every
/// generator that is not already behind one. Idempotent.
[[nodiscard]] NetworkCase attach_gsu_transformers(const NetworkCase& net,
                                                  const GsuDefaults& defaults = {});

struct ContingencySpec {
    std::vector<int> bus_outages;
    std::vector<int> branch_outages;
    double load_scale = 1.0;
};

/// Disables the listed buses and branches and scales every load.
[[nodiscard]] NetworkCase apply_contingencies(const NetworkCase& net, const ContingencySpec& spec);

/// True when the branch and both of its terminal buses are in service.
[[nodiscard]] bool branch_in_service(const NetworkCase& net, const CaseIndex& idx, const Branch& br);

/// Sum of in-service load (MW) and generator capacity (MW).
[[nodiscard]] double total_load_mw(const NetworkCase& net);
[[nodiscard]] double total_pmax_mw(const NetworkCase& net);

// Case file I/O (JSON document, angles in degrees on disk).
[[nodiscard]] NetworkCase parse_case(const std::string& text);
[[nodiscard]] NetworkCase load_case(const std::string& path);
[[nodiscard]] std::string serialize_case(const NetworkCase& net);
void save_case(const NetworkCase& net, const std::string& path);

}  // namespace gmdcascade
