#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cohbench/diagnostics.hpp"
#include "cohbench/field.hpp"

namespace cohbench {

// ---------------------------------------------------------------------------
// Element-level transforms
// ---------------------------------------------------------------------------

/// Half-wave plate at angle eta: jones multiplied by
/// [cos 2eta, sin 2eta; sin 2eta, -cos 2eta].
PortField apply_hwp(const PortField& pf, double angle_rad);

/// Polarizing beam splitter, crossed four-port routing. H transmits straight
/// through (factor 1), V reflects across (factor i):
///   h_out = H(in0) + i V(in1)
///   v_out = i V(in0) + H(in1)
/// Unassigned origins are tagged at the output: v_out -> upper,
/// h_out -> lower.
struct PbsOutputs {
  PortField h_out;
  PortField v_out;
};
PbsOutputs apply_pbs(const PortField& pf0, const PortField& pf1);

/// Symmetric 50:50 splitter: out0 = (in0 + i in1)/sqrt2,
/// out1 = (i in0 + in1)/sqrt2.
struct BsOutputs {
  PortField out0;
  PortField out1;
};
BsOutputs apply_bs(const PortField& pf0, const PortField& pf1);

/// Slot-synchronous polarization exchanger: H and V are swapped on odd
/// physical slots (switch-on), even slots pass unchanged. A term restricted
/// to one parity class is affected only if that class is the odd one.
PortField apply_eom_swap(const PortField& pf);

/// Frequency detuning by sign * delta_f: freq_offset += sign.
PortField apply_aom_shift(const PortField& pf, int sign);

/// Whole-slot delay: slot_shift += slots, amplitude *= exp(i zeta).
PortField apply_delay_slot(const PortField& pf, int slots, double zeta_rad);

/// Static phase: amplitude *= exp(i psi).
PortField apply_phase(const PortField& pf, double psi_rad);

/// Projection onto the axis (cos angle, sin angle); zero-projection terms
/// are dropped, survivors carry the axis as their polarization.
PortField apply_polarizer(const PortField& pf, double angle_rad);

// ---------------------------------------------------------------------------
// Bench graph
// ---------------------------------------------------------------------------

enum class ElementKind {
  Laser,
  Hwp,
  Pbs,
  Bs,
  Eom,
  Aom,
  Delay,
  Phase,
  Polarizer,
  Mirror,
};

const char* to_string(ElementKind k);
std::optional<ElementKind> element_kind_from_string(const std::string& s);

/// A kwarg is either a literal number or the name of a declared param.
using KwargValue = std::variant<double, std::string>;

struct Element {
  ElementKind kind = ElementKind::Mirror;
  std::map<std::string, KwargValue> kwargs;
  int line = 0;
};

std::vector<std::string> input_ports(ElementKind k);
std::vector<std::string> output_ports(ElementKind k);

struct Link {
  std::string from_node;
  std::string from_port;
  std::string to_node;
  std::string to_port;
  int line = 0;
};

struct DetectorBinding {
  std::string node;
  std::string port;
  int line = 0;
};

/// The parsed or programmatically built optical bench: a DAG of typed
/// elements plus the scalar parameter environment.
struct BenchGraph {
  std::string name = "bench";
  std::map<std::string, Element> nodes;
  std::vector<Link> links;
  std::map<std::string, DetectorBinding> detectors;

  /// Declared params in interface units (angles that feed angle_deg /
  /// angle_param sites are degrees; *_rad sites radians; the rest SI).
  std::map<std::string, double> params_table;

  /// Reserved params resolved to internal units (radians).
  BenchParams params;
};

/// Names with fixed meaning in params_table.
bool is_reserved_param(const std::string& name);

/// Set a param by interface value (degrees for xi/theta), updating both the
/// table and the resolved BenchParams mirror. Unknown names are declared.
void set_param(BenchGraph& graph, const std::string& name, double raw_value);

/// Re-derive BenchParams from the current params_table (used after parse).
void sync_reserved_params(BenchGraph& graph);

/// Structural and semantic checks; empty result means the graph is valid.
std::vector<Diagnostic> validate_graph(const BenchGraph& graph);

class GraphError : public std::runtime_error {
 public:
  GraphError(std::string msg, std::vector<Diagnostic> diags)
      : std::runtime_error(std::move(msg)), diagnostics(std::move(diags)) {}
  std::vector<Diagnostic> diagnostics;
};

struct PropagationResult {
  /// Field at every element output, keyed "node.port".
  std::map<std::string, PortField> ports;
  /// Field at each bound detector, keyed by detector name.
  std::map<std::string, PortField> detectors;
  BenchParams params;
};

/// Evaluate the graph in topological order. The laser emits amplitude e
/// (its `amplitude` kwarg), horizontal polarization, zero offset, on every
/// slot. Throws GraphError on an invalid graph.
PropagationResult propagate(const BenchGraph& graph);

/// One row of the per-port coefficient table.
struct FieldReportRow {
  std::string port;
  Origin origin = Origin::Unassigned;
  double pol_angle_deg = 0.0;
  int freq_offset = 0;
  SlotParity slot_parity = SlotParity::Even;
  int slot_shift = 0;
  Complex coeff;
};

/// Coefficient table at a port ("node.port" or a detector name), detection
/// phase applied, normalized so the largest-magnitude coefficient is real
/// positive. Throws std::invalid_argument on an unknown port.
std::vector<FieldReportRow> field_report(const PropagationResult& result,
                                         const std::string& port_key);

/// Complete built-in bench: first MZI with EOM swapping, per-port
/// PBS/AOM/delay/BS recombination, polarizers xi (signal) and theta (idler),
/// detectors s1, s2, i3, i4. Throws std::invalid_argument on nonpositive
/// e0, delta_f or t_e.
BenchGraph build_fig1(const BenchParams& params);

/// Variant used by the no-delay control: identical except the slot delays
/// are absent, so swapped and original pulses never overlap.
BenchGraph build_fig1_no_delay(const BenchParams& params);

/// Phase between the odd-slot and even-slot polarization product pairs at
/// the first interferometer's outputs. Empty if the graph lacks the A/B
/// waypoints with one term per parity class.
std::optional<double> derive_alpha(const PropagationResult& result);

/// Structural equality (nodes, links, detectors, params) used by the DSL
/// round-trip contract.
bool graph_equal(const BenchGraph& a, const BenchGraph& b);

}  // namespace cohbench
