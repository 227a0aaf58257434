#include "cohbench/optics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

namespace cohbench {

namespace {

const Complex kImag{0.0, 1.0};
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

}  // namespace

std::string to_string(const Diagnostic& d) {
  std::ostringstream os;
  os << d.line << ':' << d.column << ": "
     << (d.severity == Severity::Error ? "error" : "warning") << ": "
     << d.message;
  return os.str();
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) {
    return d.severity == Severity::Error;
  });
}

// ---------------------------------------------------------------------------
// Element transforms
// ---------------------------------------------------------------------------

PortField apply_hwp(const PortField& pf, double angle_rad) {
  const double c = std::cos(2.0 * angle_rad);
  const double s = std::sin(2.0 * angle_rad);
  PortField out;
  out.port = pf.port;
  out.terms.reserve(pf.terms.size());
  for (FieldTerm t : pf.terms) {
    const Complex h = t.jones.h;
    const Complex v = t.jones.v;
    t.jones.h = c * h + s * v;
    t.jones.v = s * h - c * v;
    out.terms.push_back(t);
  }
  return out;
}

namespace {

// Split a term into its H and V components; components below 1e-15 of the
// direction vector are dropped.
void split_hv(const FieldTerm& t, std::vector<FieldTerm>& h_parts,
              std::vector<FieldTerm>& v_parts) {
  if (std::abs(t.jones.h) >= 1e-15) {
    FieldTerm h = t;
    h.amplitude = t.amplitude * t.jones.h;
    h.jones = jones_h();
    h_parts.push_back(h);
  }
  if (std::abs(t.jones.v) >= 1e-15) {
    FieldTerm v = t;
    v.amplitude = t.amplitude * t.jones.v;
    v.jones = jones_v();
    v_parts.push_back(v);
  }
}

void tag_origin(std::vector<FieldTerm>& terms, Origin origin) {
  for (FieldTerm& t : terms) {
    if (t.origin == Origin::Unassigned) t.origin = origin;
  }
}

}  // namespace

PbsOutputs apply_pbs(const PortField& pf0, const PortField& pf1) {
  std::vector<FieldTerm> h0, v0, h1, v1;
  for (const FieldTerm& t : pf0.terms) split_hv(t, h0, v0);
  for (const FieldTerm& t : pf1.terms) split_hv(t, h1, v1);
  // Transmission keeps the line of flight, reflection crosses it and picks
  // up the factor i.
  for (FieldTerm& t : v0) t.amplitude *= kImag;
  for (FieldTerm& t : v1) t.amplitude *= kImag;

  PbsOutputs out;
  out.h_out.terms = h0;
  out.h_out.terms.insert(out.h_out.terms.end(), v1.begin(), v1.end());
  out.v_out.terms = v0;
  out.v_out.terms.insert(out.v_out.terms.end(), h1.begin(), h1.end());
  tag_origin(out.h_out.terms, Origin::Lower);
  tag_origin(out.v_out.terms, Origin::Upper);
  return out;
}

BsOutputs apply_bs(const PortField& pf0, const PortField& pf1) {
  BsOutputs out;
  for (FieldTerm t : pf0.terms) {
    FieldTerm a = t;
    a.amplitude *= kInvSqrt2;
    out.out0.terms.push_back(a);
    FieldTerm b = t;
    b.amplitude *= kImag * kInvSqrt2;
    out.out1.terms.push_back(b);
  }
  for (FieldTerm t : pf1.terms) {
    FieldTerm a = t;
    a.amplitude *= kImag * kInvSqrt2;
    out.out0.terms.push_back(a);
    FieldTerm b = t;
    b.amplitude *= kInvSqrt2;
    out.out1.terms.push_back(b);
  }
  return out;
}

PortField apply_eom_swap(const PortField& pf) {
  PortField out;
  out.port = pf.port;
  out.terms.reserve(pf.terms.size());
  for (FieldTerm t : pf.terms) {
    if (t.parity_index() == 1) std::swap(t.jones.h, t.jones.v);
    out.terms.push_back(t);
  }
  return out;
}

PortField apply_aom_shift(const PortField& pf, int sign) {
  PortField out = pf;
  for (FieldTerm& t : out.terms) t.freq_offset += sign;
  return out;
}

PortField apply_delay_slot(const PortField& pf, int slots, double zeta_rad) {
  if (slots < 0) throw std::invalid_argument("delay: slots must be >= 0");
  PortField out = pf;
  const Complex phase = std::polar(1.0, zeta_rad);
  for (FieldTerm& t : out.terms) {
    t.slot_shift += slots;
    t.amplitude *= phase;
  }
  return out;
}

PortField apply_phase(const PortField& pf, double psi_rad) {
  PortField out = pf;
  const Complex phase = std::polar(1.0, psi_rad);
  for (FieldTerm& t : out.terms) t.amplitude *= phase;
  return out;
}

PortField apply_polarizer(const PortField& pf, double angle_rad) {
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  PortField out;
  out.port = pf.port;
  for (FieldTerm t : pf.terms) {
    const Complex proj = t.jones.h * c + t.jones.v * s;
    if (std::abs(proj) < 1e-15) continue;
    t.amplitude *= proj;
    t.jones = JonesVec{{c, 0.0}, {s, 0.0}};
    out.terms.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Element kind tables
// ---------------------------------------------------------------------------

const char* to_string(ElementKind k) {
  switch (k) {
    case ElementKind::Laser: return "laser";
    case ElementKind::Hwp: return "hwp";
    case ElementKind::Pbs: return "pbs";
    case ElementKind::Bs: return "bs";
    case ElementKind::Eom: return "eom";
    case ElementKind::Aom: return "aom";
    case ElementKind::Delay: return "delay";
    case ElementKind::Phase: return "phase";
    case ElementKind::Polarizer: return "polarizer";
    case ElementKind::Mirror: return "mirror";
  }
  return "?";
}

std::optional<ElementKind> element_kind_from_string(const std::string& s) {
  static const std::map<std::string, ElementKind> table = {
      {"laser", ElementKind::Laser},     {"hwp", ElementKind::Hwp},
      {"pbs", ElementKind::Pbs},         {"bs", ElementKind::Bs},
      {"eom", ElementKind::Eom},         {"aom", ElementKind::Aom},
      {"delay", ElementKind::Delay},     {"phase", ElementKind::Phase},
      {"polarizer", ElementKind::Polarizer}, {"mirror", ElementKind::Mirror}};
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> input_ports(ElementKind k) {
  switch (k) {
    case ElementKind::Laser: return {};
    case ElementKind::Pbs:
    case ElementKind::Bs: return {"in0", "in1"};
    default: return {"in"};
  }
}

std::vector<std::string> output_ports(ElementKind k) {
  switch (k) {
    case ElementKind::Laser: return {"out"};
    case ElementKind::Pbs: return {"h_out", "v_out"};
    case ElementKind::Bs: return {"out0", "out1"};
    default: return {"out"};
  }
}

namespace {

struct KwargSchema {
  std::vector<std::string> required;
  std::vector<std::string> optional;
};

KwargSchema kwarg_schema(ElementKind k) {
  switch (k) {
    case ElementKind::Laser: return {{"amplitude"}, {}};
    case ElementKind::Hwp: return {{"angle_deg"}, {}};
    case ElementKind::Aom: return {{"sign"}, {}};
    case ElementKind::Delay: return {{"slots", "zeta_rad"}, {"sign"}};
    case ElementKind::Phase: return {{"psi_rad"}, {}};
    case ElementKind::Polarizer: return {{}, {"angle_deg", "angle_param"}};
    default: return {{}, {}};
  }
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

// ---------------------------------------------------------------------------
// Params
// ---------------------------------------------------------------------------

bool is_reserved_param(const std::string& name) {
  static const std::set<std::string> reserved = {
      "delta_f", "t_e", "e0", "psi", "zeta", "tau", "xi", "theta"};
  return reserved.count(name) > 0;
}

namespace {

void mirror_reserved(BenchGraph& graph, const std::string& name, double raw) {
  BenchParams& p = graph.params;
  if (name == "e0") p.e0 = raw;
  else if (name == "delta_f") p.delta_f = raw;
  else if (name == "t_e") p.t_e = raw;
  else if (name == "psi") p.psi = raw;
  else if (name == "zeta") p.zeta = raw;
  else if (name == "tau") p.tau = raw;
  else if (name == "xi") p.xi = deg2rad(raw);
  else if (name == "theta") p.theta = deg2rad(raw);
}

}  // namespace

void set_param(BenchGraph& graph, const std::string& name, double raw_value) {
  graph.params_table[name] = raw_value;
  mirror_reserved(graph, name, raw_value);
}

void sync_reserved_params(BenchGraph& graph) {
  for (const auto& [name, raw] : graph.params_table) {
    mirror_reserved(graph, name, raw);
  }
}

namespace {

double resolve_value(const BenchGraph& graph, const KwargValue& kw) {
  if (std::holds_alternative<double>(kw)) return std::get<double>(kw);
  return graph.params_table.at(std::get<std::string>(kw));
}

double resolve_kwarg(const BenchGraph& graph, const Element& e,
                     const std::string& key) {
  return resolve_value(graph, e.kwargs.at(key));
}

double polarizer_angle_rad(const BenchGraph& graph, const Element& e) {
  if (e.kwargs.count("angle_param")) {
    const std::string& name = std::get<std::string>(e.kwargs.at("angle_param"));
    return deg2rad(graph.params_table.at(name));
  }
  return deg2rad(resolve_kwarg(graph, e, "angle_deg"));
}

}  // namespace

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<Diagnostic> validate_graph(const BenchGraph& graph) {
  std::vector<Diagnostic> diags;
  auto error = [&diags](int line, std::string msg) {
    diags.push_back({line, 1, Severity::Error, std::move(msg)});
  };
  auto warning = [&diags](int line, std::string msg) {
    diags.push_back({line, 1, Severity::Warning, std::move(msg)});
  };

  // Kwarg schemas and param references.
  for (const auto& [name, node] : graph.nodes) {
    const KwargSchema schema = kwarg_schema(node.kind);
    for (const std::string& req : schema.required) {
      if (!node.kwargs.count(req)) {
        error(node.line, "node '" + name + "': missing required kwarg '" +
                             req + "' for kind " + to_string(node.kind));
      }
    }
    for (const auto& [key, value] : node.kwargs) {
      if (!contains(schema.required, key) && !contains(schema.optional, key)) {
        error(node.line, "node '" + name + "': unknown kwarg '" + key +
                             "' for kind " + to_string(node.kind));
        continue;
      }
      if (std::holds_alternative<std::string>(value)) {
        const std::string& ref = std::get<std::string>(value);
        if (!graph.params_table.count(ref)) {
          error(node.line, "node '" + name + "': kwarg '" + key +
                               "' references undeclared param '" + ref + "'");
        }
      }
    }
    if (node.kind == ElementKind::Polarizer) {
      const int n = static_cast<int>(node.kwargs.count("angle_deg")) +
                    static_cast<int>(node.kwargs.count("angle_param"));
      if (n != 1) {
        error(node.line, "node '" + name +
                             "': polarizer needs exactly one of angle_deg, "
                             "angle_param");
      }
    }
    if (node.kind == ElementKind::Aom || node.kind == ElementKind::Delay) {
      auto it = node.kwargs.find("sign");
      if (it != node.kwargs.end() &&
          std::holds_alternative<double>(it->second)) {
        const double s = std::get<double>(it->second);
        if (s != 1.0 && s != -1.0) {
          error(node.line, "node '" + name + "': sign must be +1 or -1");
        }
      }
    }
    if (node.kind == ElementKind::Delay) {
      auto it = node.kwargs.find("slots");
      if (it != node.kwargs.end() &&
          std::holds_alternative<double>(it->second)) {
        const double s = std::get<double>(it->second);
        if (s < 0.0 || s != std::floor(s)) {
          error(node.line,
                "node '" + name + "': slots must be a nonnegative integer");
        }
      }
    }
  }

  // Links: node/port existence, fan-in, fan-out.
  std::map<std::string, int> in_count;    // "node.port"
  std::map<std::string, int> out_count;   // "node.port"
  for (const Link& l : graph.links) {
    auto from = graph.nodes.find(l.from_node);
    auto to = graph.nodes.find(l.to_node);
    if (from == graph.nodes.end()) {
      error(l.line, "link references unknown node '" + l.from_node + "'");
      continue;
    }
    if (to == graph.nodes.end()) {
      error(l.line, "link references unknown node '" + l.to_node + "'");
      continue;
    }
    if (!contains(output_ports(from->second.kind), l.from_port)) {
      error(l.line, "node '" + l.from_node + "' (" +
                        to_string(from->second.kind) + ") has no output port '" +
                        l.from_port + "'");
      continue;
    }
    if (!contains(input_ports(to->second.kind), l.to_port)) {
      error(l.line, "node '" + l.to_node + "' (" + to_string(to->second.kind) +
                        ") has no input port '" + l.to_port + "'");
      continue;
    }
    const std::string in_key = l.to_node + "." + l.to_port;
    const std::string out_key = l.from_node + "." + l.from_port;
    if (++in_count[in_key] > 1) {
      error(l.line, "input port '" + in_key + "' has more than one incoming link");
    }
    if (++out_count[out_key] > 1) {
      error(l.line, "output port '" + out_key + "' is linked more than once");
    }
  }

  // Detectors bind otherwise-unconsumed output ports.
  std::map<std::string, std::string> det_port_owner;
  for (const auto& [name, det] : graph.detectors) {
    auto node = graph.nodes.find(det.node);
    if (node == graph.nodes.end()) {
      error(det.line, "detector '" + name + "' references unknown node '" +
                          det.node + "'");
      continue;
    }
    if (!contains(output_ports(node->second.kind), det.port)) {
      error(det.line, "detector '" + name + "': node '" + det.node +
                          "' has no output port '" + det.port + "'");
      continue;
    }
    const std::string key = det.node + "." + det.port;
    if (out_count.count(key)) {
      error(det.line, "detector '" + name + "': port '" + key +
                          "' is already consumed by a link");
    }
    auto [it, inserted] = det_port_owner.emplace(key, name);
    if (!inserted) {
      error(det.line, "detectors '" + it->second + "' and '" + name +
                          "' bind the same port '" + key + "'");
    }
  }

  // Cycle check (Kahn) over node-level edges.
  std::map<std::string, std::set<std::string>> succ;
  std::map<std::string, int> indeg;
  for (const auto& [name, node] : graph.nodes) indeg[name] = 0;
  for (const Link& l : graph.links) {
    if (!graph.nodes.count(l.from_node) || !graph.nodes.count(l.to_node)) {
      continue;
    }
    if (succ[l.from_node].insert(l.to_node).second) ++indeg[l.to_node];
  }
  std::set<std::string> ready;
  for (const auto& [name, deg] : indeg) {
    if (deg == 0) ready.insert(name);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::string n = *ready.begin();
    ready.erase(ready.begin());
    ++visited;
    for (const std::string& m : succ[n]) {
      if (--indeg[m] == 0) ready.insert(m);
    }
  }
  if (visited != graph.nodes.size()) {
    for (const auto& [name, deg] : indeg) {
      if (deg > 0) {
        error(graph.nodes.at(name).line,
              "cycle detected through node '" + name + "'");
        break;
      }
    }
  }

  // Dead nodes (no light can ever reach them) are suspicious but harmless.
  for (const auto& [name, node] : graph.nodes) {
    if (node.kind == ElementKind::Laser) continue;
    bool fed = false;
    for (const Link& l : graph.links) {
      if (l.to_node == name) {
        fed = true;
        break;
      }
    }
    if (!fed) warning(node.line, "node '" + name + "' has no incoming link");
  }

  // Declared reserved params must stay in their domain.
  for (const auto& [name, value] : graph.params_table) {
    if ((name == "delta_f" || name == "t_e") && value <= 0.0) {
      error(1, "param '" + name + "' must be positive");
    }
  }

  return diags;
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> topo_order(const BenchGraph& graph) {
  std::map<std::string, std::set<std::string>> succ;
  std::map<std::string, int> indeg;
  for (const auto& [name, node] : graph.nodes) indeg[name] = 0;
  for (const Link& l : graph.links) {
    if (succ[l.from_node].insert(l.to_node).second) ++indeg[l.to_node];
  }
  std::set<std::string> ready;
  for (const auto& [name, deg] : indeg) {
    if (deg == 0) ready.insert(name);
  }
  std::vector<std::string> order;
  order.reserve(graph.nodes.size());
  while (!ready.empty()) {
    const std::string n = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(n);
    for (const std::string& m : succ[n]) {
      if (--indeg[m] == 0) ready.insert(m);
    }
  }
  return order;
}

}  // namespace

PropagationResult propagate(const BenchGraph& graph) {
  std::vector<Diagnostic> diags = validate_graph(graph);
  if (has_errors(diags)) {
    std::string msg = "invalid bench graph";
    for (const Diagnostic& d : diags) {
      if (d.severity == Severity::Error) {
        msg += ": " + d.message;
        break;
      }
    }
    throw GraphError(msg, std::move(diags));
  }

  PropagationResult result;
  result.params = graph.params;

  std::map<std::string, const Link*> incoming;  // "node.port" -> link
  for (const Link& l : graph.links) {
    incoming[l.to_node + "." + l.to_port] = &l;
  }
  auto input_field = [&](const std::string& node,
                         const std::string& port) -> PortField {
    auto it = incoming.find(node + "." + port);
    if (it == incoming.end()) return PortField{};
    const Link* l = it->second;
    return result.ports.at(l->from_node + "." + l->from_port);
  };
  auto store = [&](const std::string& node, const std::string& port,
                   PortField pf) {
    pf.port = node + "." + port;
    result.ports[pf.port] = merge_terms(pf);
  };

  for (const std::string& name : topo_order(graph)) {
    const Element& node = graph.nodes.at(name);
    switch (node.kind) {
      case ElementKind::Laser: {
        const double amp = resolve_kwarg(graph, node, "amplitude");
        PortField out;
        FieldTerm even;
        even.amplitude = amp;
        even.jones = jones_h();
        even.slot_parity = SlotParity::Even;
        FieldTerm odd = even;
        odd.slot_parity = SlotParity::Odd;
        out.terms = {even, odd};
        store(name, "out", std::move(out));
        break;
      }
      case ElementKind::Hwp:
        store(name, "out",
              apply_hwp(input_field(name, "in"),
                        deg2rad(resolve_kwarg(graph, node, "angle_deg"))));
        break;
      case ElementKind::Pbs: {
        PbsOutputs out =
            apply_pbs(input_field(name, "in0"), input_field(name, "in1"));
        store(name, "h_out", std::move(out.h_out));
        store(name, "v_out", std::move(out.v_out));
        break;
      }
      case ElementKind::Bs: {
        BsOutputs out =
            apply_bs(input_field(name, "in0"), input_field(name, "in1"));
        store(name, "out0", std::move(out.out0));
        store(name, "out1", std::move(out.out1));
        break;
      }
      case ElementKind::Eom:
        store(name, "out", apply_eom_swap(input_field(name, "in")));
        break;
      case ElementKind::Aom: {
        const int sign =
            static_cast<int>(resolve_kwarg(graph, node, "sign"));
        store(name, "out", apply_aom_shift(input_field(name, "in"), sign));
        break;
      }
      case ElementKind::Delay: {
        const int slots =
            static_cast<int>(resolve_kwarg(graph, node, "slots"));
        double zeta = resolve_kwarg(graph, node, "zeta_rad");
        if (node.kwargs.count("sign")) {
          zeta *= resolve_kwarg(graph, node, "sign");
        }
        store(name, "out",
              apply_delay_slot(input_field(name, "in"), slots, zeta));
        break;
      }
      case ElementKind::Phase:
        store(name, "out",
              apply_phase(input_field(name, "in"),
                          resolve_kwarg(graph, node, "psi_rad")));
        break;
      case ElementKind::Polarizer:
        store(name, "out",
              apply_polarizer(input_field(name, "in"),
                              polarizer_angle_rad(graph, node)));
        break;
      case ElementKind::Mirror:
        store(name, "out", input_field(name, "in"));
        break;
    }
  }

  for (const auto& [det_name, det] : graph.detectors) {
    result.detectors[det_name] = result.ports.at(det.node + "." + det.port);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Field report
// ---------------------------------------------------------------------------

namespace {

// Normalize a (jones, amplitude) pair so jones = (cos a, sin a) with the
// axis angle a in [0, 180) degrees. Only meaningful for the real linear
// states this artifact produces.
double axis_angle_deg(FieldTerm& t) {
  t = canonical(t);
  double h = t.jones.h.real();
  double v = t.jones.v.real();
  if (v < 0.0 || (std::abs(v) < 1e-15 && h < 0.0)) {
    h = -h;
    v = -v;
    t.jones.h = -t.jones.h;
    t.jones.v = -t.jones.v;
    t.amplitude = -t.amplitude;
  }
  double deg = rad2deg(std::atan2(v, h));
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0 - 1e-12) deg = 0.0;
  return deg;
}

}  // namespace

std::vector<FieldReportRow> field_report(const PropagationResult& result,
                                         const std::string& port_key) {
  const PortField* pf = nullptr;
  auto det = result.detectors.find(port_key);
  if (det != result.detectors.end()) {
    pf = &det->second;
  } else {
    auto it = result.ports.find(port_key);
    if (it == result.ports.end()) {
      throw std::invalid_argument("unknown port '" + port_key + "'");
    }
    pf = &it->second;
  }

  PortField staged = merge_terms(with_detection_phase(*pf, result.params));
  // Remove the global port phase: rotate so the largest coefficient is
  // real positive.
  Complex ref{1.0, 0.0};
  double best = -1.0;
  for (const FieldTerm& t : staged.terms) {
    if (std::abs(t.amplitude) > best) {
      best = std::abs(t.amplitude);
      ref = t.amplitude / std::abs(t.amplitude);
    }
  }
  std::vector<FieldReportRow> rows;
  rows.reserve(staged.terms.size());
  for (FieldTerm t : staged.terms) {
    t.amplitude /= ref;
    FieldReportRow row;
    row.pol_angle_deg = axis_angle_deg(t);
    row.port = port_key;
    row.origin = t.origin;
    row.freq_offset = t.freq_offset;
    row.slot_parity = t.slot_parity;
    row.slot_shift = t.slot_shift;
    row.coeff = t.amplitude;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Built-in bench
// ---------------------------------------------------------------------------

namespace {

BenchGraph build_fig1_impl(const BenchParams& params, bool with_delay) {
  if (params.e0 <= 0.0 || params.delta_f <= 0.0 || params.t_e <= 0.0) {
    throw std::invalid_argument("build_fig1: e0, delta_f and t_e must be positive");
  }
  BenchGraph g;
  g.name = with_delay ? "fig1" : "fig1_no_delay";
  g.params = params;
  g.params_table = {
      {"e0", params.e0},       {"delta_f", params.delta_f},
      {"t_e", params.t_e},     {"psi", params.psi},
      {"zeta", params.zeta},   {"tau", params.tau},
      {"xi", rad2deg(params.xi)}, {"theta", rad2deg(params.theta)},
  };

  auto node = [&g](const std::string& name, ElementKind kind,
                   std::map<std::string, KwargValue> kwargs = {}) {
    g.nodes[name] = Element{kind, std::move(kwargs), 0};
  };
  auto link = [&g](const std::string& a, const std::string& ap,
                   const std::string& b, const std::string& bp) {
    g.links.push_back({a, ap, b, bp, 0});
  };

  node("L", ElementKind::Laser, {{"amplitude", std::string("e0")}});
  node("H1", ElementKind::Hwp, {{"angle_deg", 22.5}});
  node("PBS1", ElementKind::Pbs);
  node("EOM_U", ElementKind::Eom);
  node("EOM_L", ElementKind::Eom);
  node("H2", ElementKind::Hwp, {{"angle_deg", 45.0}});
  node("PZT", ElementKind::Phase, {{"psi_rad", std::string("psi")}});
  node("PBS2", ElementKind::Pbs);
  node("A", ElementKind::Mirror);
  node("B", ElementKind::Mirror);

  link("L", "out", "H1", "in");
  link("H1", "out", "PBS1", "in0");
  link("PBS1", "v_out", "EOM_U", "in");
  link("EOM_U", "out", "PZT", "in");
  link("PZT", "out", "PBS2", "in0");
  link("PBS1", "h_out", "EOM_L", "in");
  link("EOM_L", "out", "H2", "in");
  link("H2", "out", "PBS2", "in1");
  link("PBS2", "v_out", "A", "in");
  link("PBS2", "h_out", "B", "in");

  // Signal side: +df rides the upper-origin (V_u) arm, which also carries
  // the original (even-slot) pulses and therefore the compensating delay.
  node("PBS_A", ElementKind::Pbs);
  node("AOM_A_U", ElementKind::Aom, {{"sign", 1.0}});
  node("AOM_A_L", ElementKind::Aom, {{"sign", -1.0}});
  node("BS_A", ElementKind::Bs);
  node("P_S1", ElementKind::Polarizer, {{"angle_param", std::string("xi")}});
  node("P_S2", ElementKind::Polarizer, {{"angle_param", std::string("xi")}});
  link("A", "out", "PBS_A", "in0");
  link("PBS_A", "v_out", "AOM_A_U", "in");
  link("PBS_A", "h_out", "AOM_A_L", "in");
  link("AOM_A_L", "out", "BS_A", "in1");
  link("BS_A", "out0", "P_S1", "in");
  link("BS_A", "out1", "P_S2", "in");

  // Idler side: the upper-origin light is horizontally polarized here, so
  // +df rides the h arm while the delayed original pulses are the V_l arm.
  // The idler delay phase enters with the opposite sign, which keeps the
  // fringe phase of all four detectors equal to psi + zeta + 2pi 2df tau.
  node("PBS_B", ElementKind::Pbs);
  node("AOM_B_U", ElementKind::Aom, {{"sign", 1.0}});
  node("AOM_B_L", ElementKind::Aom, {{"sign", -1.0}});
  node("BS_B", ElementKind::Bs);
  node("P_I3", ElementKind::Polarizer, {{"angle_param", std::string("theta")}});
  node("P_I4", ElementKind::Polarizer, {{"angle_param", std::string("theta")}});
  link("B", "out", "PBS_B", "in0");
  link("PBS_B", "h_out", "AOM_B_U", "in");
  link("PBS_B", "v_out", "AOM_B_L", "in");
  link("AOM_B_U", "out", "BS_B", "in1");
  link("BS_B", "out0", "P_I3", "in");
  link("BS_B", "out1", "P_I4", "in");

  if (with_delay) {
    node("DL_A", ElementKind::Delay,
         {{"slots", 1.0}, {"zeta_rad", std::string("zeta")}, {"sign", 1.0}});
    node("DL_B", ElementKind::Delay,
         {{"slots", 1.0}, {"zeta_rad", std::string("zeta")}, {"sign", -1.0}});
    link("AOM_A_U", "out", "DL_A", "in");
    link("DL_A", "out", "BS_A", "in0");
    link("AOM_B_L", "out", "DL_B", "in");
    link("DL_B", "out", "BS_B", "in0");
  } else {
    link("AOM_A_U", "out", "BS_A", "in0");
    link("AOM_B_L", "out", "BS_B", "in0");
  }

  g.detectors = {
      {"s1", {"P_S1", "out", 0}},
      {"s2", {"P_S2", "out", 0}},
      {"i3", {"P_I3", "out", 0}},
      {"i4", {"P_I4", "out", 0}},
  };

  if (auto alpha = derive_alpha(propagate(g))) g.params.alpha = *alpha;
  return g;
}

}  // namespace

BenchGraph build_fig1(const BenchParams& params) {
  return build_fig1_impl(params, true);
}

BenchGraph build_fig1_no_delay(const BenchParams& params) {
  return build_fig1_impl(params, false);
}

std::optional<double> derive_alpha(const PropagationResult& result) {
  auto a = result.ports.find("A.out");
  auto b = result.ports.find("B.out");
  if (a == result.ports.end() || b == result.ports.end()) return std::nullopt;
  auto pick = [](const PortField& pf, int parity) -> std::optional<Complex> {
    Complex sum{0.0, 0.0};
    int n = 0;
    for (const FieldTerm& t : pf.terms) {
      if (t.parity_index() == parity) {
        sum += t.amplitude;
        ++n;
      }
    }
    if (n != 1) return std::nullopt;
    return sum;
  };
  auto a0 = pick(a->second, 0), a1 = pick(a->second, 1);
  auto b0 = pick(b->second, 0), b1 = pick(b->second, 1);
  if (!a0 || !a1 || !b0 || !b1) return std::nullopt;
  return std::arg((*a1) * (*b1) * std::conj((*a0) * (*b0)));
}

bool graph_equal(const BenchGraph& a, const BenchGraph& b) {
  if (a.name != b.name) return false;
  if (a.params_table != b.params_table) return false;
  if (a.nodes.size() != b.nodes.size()) return false;
  for (const auto& [name, node] : a.nodes) {
    auto it = b.nodes.find(name);
    if (it == b.nodes.end()) return false;
    if (it->second.kind != node.kind || it->second.kwargs != node.kwargs) {
      return false;
    }
  }
  auto link_key = [](const Link& l) {
    return std::tie(l.from_node, l.from_port, l.to_node, l.to_port);
  };
  auto la = a.links, lb = b.links;
  std::sort(la.begin(), la.end(),
            [&](const Link& x, const Link& y) { return link_key(x) < link_key(y); });
  std::sort(lb.begin(), lb.end(),
            [&](const Link& x, const Link& y) { return link_key(x) < link_key(y); });
  if (la.size() != lb.size()) return false;
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (link_key(la[i]) != link_key(lb[i])) return false;
  }
  if (a.detectors.size() != b.detectors.size()) return false;
  for (const auto& [name, det] : a.detectors) {
    auto it = b.detectors.find(name);
    if (it == b.detectors.end()) return false;
    if (it->second.node != det.node || it->second.port != det.port) {
      return false;
    }
  }
  return true;
}

}  // namespace cohbench
