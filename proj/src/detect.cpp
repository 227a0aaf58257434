#include "cohbench/detect.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace cohbench::detect {

namespace {

bool class_occupied(const PortField& pf, int parity) {
  return std::any_of(pf.terms.begin(), pf.terms.end(), [parity](const FieldTerm& t) {
    return t.parity_index() == parity;
  });
}

const PortField& detector_field(const PropagationResult& result,
                                const std::string& detector) {
  auto it = result.detectors.find(detector);
  if (it == result.detectors.end()) {
    throw std::invalid_argument("unknown detector '" + detector + "'");
  }
  return it->second;
}

}  // namespace

double detector_mean(const PortField& field, const BenchParams& params) {
  double total = 0.0;
  int occupied = 0;
  for (int parity = 0; parity < 2; ++parity) {
    if (!class_occupied(field, parity)) continue;
    // Slot `parity` is a representative of its class.
    total += instantaneous_intensity(field, params.tau, parity, params);
    ++occupied;
  }
  return occupied == 0 ? 0.0 : total / occupied;
}

double detector_mean(const BenchGraph& graph, const std::string& detector) {
  const PropagationResult result = propagate(graph);
  return detector_mean(detector_field(result, detector), result.params);
}

double fringe_visibility(const std::vector<std::pair<double, double>>& trace) {
  if (trace.size() < 2) {
    throw std::invalid_argument("fringe_visibility: need at least two points");
  }
  double phi_min = trace.front().first, phi_max = trace.front().first;
  double lo = trace.front().second, hi = trace.front().second;
  for (const auto& [phi, value] : trace) {
    phi_min = std::min(phi_min, phi);
    phi_max = std::max(phi_max, phi);
    lo = std::min(lo, value);
    hi = std::max(hi, value);
  }
  if (phi_max - phi_min < kPi) {
    throw std::invalid_argument("fringe_visibility: grid must span a period");
  }
  if (hi + lo <= 0.0) return 0.0;
  return (hi - lo) / (hi + lo);
}

void set_phi(BenchGraph& graph, double phi_rad) {
  const BenchParams& p = graph.params;
  set_param(graph, "psi",
            phi_rad - p.zeta - kTwoPi * 2.0 * p.delta_f * p.tau);
}

void set_polarizer_angles(BenchGraph& graph, double xi_rad, double theta_rad) {
  set_param(graph, "xi", rad2deg(xi_rad));
  set_param(graph, "theta", rad2deg(theta_rad));
}

std::vector<double> default_phi_grid(int n) {
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = kTwoPi * i / n;
  return grid;
}

double CorrelationResult::phi_spread() const {
  if (per_phi_values.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(per_phi_values.begin(), per_phi_values.end());
  return *hi - *lo;
}

// ---------------------------------------------------------------------------
// Party check
// ---------------------------------------------------------------------------

namespace {

std::set<std::string> ancestors(const BenchGraph& graph,
                                const std::string& start_node) {
  std::set<std::string> seen;
  std::vector<std::string> stack{start_node};
  while (!stack.empty()) {
    const std::string n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    for (const Link& l : graph.links) {
      if (l.to_node == n) stack.push_back(l.from_node);
    }
  }
  return seen;
}

// The two detectors are a cross-party pair when the last element both
// ancestries share splits them at a PBS; diverging only at a BS means they
// are two output ports of one local interferometer.
void require_cross_party(const BenchGraph& graph, const std::string& det_a,
                         const std::string& det_b) {
  if (!graph.detectors.count(det_a) || !graph.detectors.count(det_b)) {
    throw std::invalid_argument("unknown detector in correlation pair");
  }
  const auto& da = graph.detectors.at(det_a);
  const auto& db = graph.detectors.at(det_b);
  const std::set<std::string> anc_a = ancestors(graph, da.node);
  const std::set<std::string> anc_b = ancestors(graph, db.node);
  // "Latest" shared node = the one with the deepest ancestry of its own.
  std::string divergence;
  std::size_t best_rank = 0;
  for (const std::string& n : anc_a) {
    if (!anc_b.count(n)) continue;
    bool to_a_only = false, to_b_only = false;
    for (const Link& l : graph.links) {
      if (l.from_node != n) continue;
      const bool in_a = anc_a.count(l.to_node) > 0;
      const bool in_b = anc_b.count(l.to_node) > 0;
      if (in_a && !in_b) to_a_only = true;
      if (in_b && !in_a) to_b_only = true;
    }
    if (to_a_only && to_b_only) {
      const std::size_t rank = ancestors(graph, n).size();
      if (rank >= best_rank) {
        best_rank = rank;
        divergence = n;
      }
    }
  }
  if (divergence.empty() ||
      graph.nodes.at(divergence).kind != ElementKind::Pbs) {
    throw std::invalid_argument("detectors '" + det_a + "' and '" + det_b +
                                "' are not a cross-party pair");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Analytic correlation
// ---------------------------------------------------------------------------

namespace {

struct RawCorrelation {
  double gated = 0.0;
  double ungated = 0.0;
};

RawCorrelation correlate_fields(const PortField& fa, const PortField& fb,
                                const BenchParams& params) {
  const PortField a = with_detection_phase(fa, params);
  const PortField b = with_detection_phase(fb, params);
  const std::vector<ProductPair> pairs = product_term_pairs(a, b);
  RawCorrelation out;
  int joint = 0;
  for (int parity = 0; parity < 2; ++parity) {
    if (!class_occupied(a, parity) || !class_occupied(b, parity)) continue;
    ++joint;
    std::map<int, Complex> by_net;
    for (const ProductPair& p : pairs) {
      if (p.a.parity_index() != parity || p.b.parity_index() != parity) {
        continue;
      }
      by_net[p.net_offset] += p.amplitude;
    }
    for (const auto& [net, sum] : by_net) {
      const double power = std::norm(sum);
      out.ungated += power;
      if (net == 0) out.gated += power;
    }
  }
  if (joint > 0) {
    out.gated /= joint;
    out.ungated /= joint;
  }
  return out;
}

RawCorrelation correlate_graph(const BenchGraph& graph,
                               const std::string& det_a,
                               const std::string& det_b) {
  const PropagationResult result = propagate(graph);
  return correlate_fields(detector_field(result, det_a),
                          detector_field(result, det_b), result.params);
}

}  // namespace

double gated_correlation_value(const BenchGraph& graph,
                               const std::string& det_a,
                               const std::string& det_b) {
  require_cross_party(graph, det_a, det_b);
  return correlate_graph(graph, det_a, det_b).gated;
}

double ungated_correlation_value(const BenchGraph& graph,
                                 const std::string& det_a,
                                 const std::string& det_b) {
  require_cross_party(graph, det_a, det_b);
  return correlate_graph(graph, det_a, det_b).ungated;
}

CorrelationResult gated_correlation_analytic(const BenchGraph& graph,
                                             const std::string& det_a,
                                             const std::string& det_b) {
  if (!graph.detectors.count(det_a) || !graph.detectors.count(det_b)) {
    throw std::invalid_argument("unknown detector in correlation pair");
  }
  require_cross_party(graph, det_a, det_b);

  CorrelationResult res;
  res.det_a = det_a;
  res.det_b = det_b;
  res.pipeline = Pipeline::Analytic;
  const RawCorrelation raw = correlate_graph(graph, det_a, det_b);
  res.gated_value = raw.gated;
  res.ungated_value = raw.ungated;
  res.phi_grid = default_phi_grid();
  res.per_phi_values.reserve(res.phi_grid.size());
  for (double phi : res.phi_grid) {
    BenchGraph scan = graph;
    set_phi(scan, phi);
    res.per_phi_values.push_back(correlate_graph(scan, det_a, det_b).gated);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Sampled pipeline
// ---------------------------------------------------------------------------

SamplingConfig SamplingConfig::defaults(const BenchParams& params) {
  SamplingConfig cfg;
  cfg.sample_rate = 64.0 * params.delta_f;
  cfg.duration = 16.0 / (2.0 * params.delta_f);
  return cfg;
}

namespace {

int checked_sample_count(const SamplingConfig& cfg, const BenchParams& params) {
  if (cfg.sample_rate < 16.0 * 2.0 * params.delta_f) {
    throw std::invalid_argument(
        "sampling config: sample_rate below 16 x (2 delta_f)");
  }
  const double beats = cfg.duration * 2.0 * params.delta_f;
  if (std::abs(beats - std::round(beats)) > 1e-9 || beats < 1.0) {
    throw std::invalid_argument(
        "sampling config: duration must cover whole beat periods");
  }
  const double n = cfg.sample_rate * cfg.duration;
  if (std::abs(n - std::round(n)) > 1e-9) {
    throw std::invalid_argument(
        "sampling config: sample count must be an integer");
  }
  return static_cast<int>(std::round(n));
}

// Scalar rotating-frame envelope of one slot class at the sample times.
// Valid for polarizer-projected fields (all terms share one axis).
std::vector<Complex> synth_envelope(const PortField& pf, int parity,
                                    const BenchParams& params, int n,
                                    double dt) {
  std::vector<Complex> env(n, Complex{0.0, 0.0});
  for (const FieldTerm& t : pf.terms) {
    if (t.parity_index() != parity) continue;
    const double w = kTwoPi * t.freq_offset * params.delta_f;
    for (int i = 0; i < n; ++i) {
      env[i] += t.amplitude * std::polar(1.0, w * i * dt);
    }
  }
  return env;
}

// H/V component envelopes; used for detector intensities where the field
// need not be polarizer-projected.
std::array<std::vector<Complex>, 2> synth_envelope_hv(const PortField& pf,
                                                      int parity,
                                                      const BenchParams& params,
                                                      int n, double dt) {
  std::array<std::vector<Complex>, 2> env{
      std::vector<Complex>(n, Complex{0.0, 0.0}),
      std::vector<Complex>(n, Complex{0.0, 0.0})};
  for (const FieldTerm& t : pf.terms) {
    if (t.parity_index() != parity) continue;
    const double w = kTwoPi * t.freq_offset * params.delta_f;
    for (int i = 0; i < n; ++i) {
      const Complex rot = t.amplitude * std::polar(1.0, w * i * dt);
      env[0][i] += rot * t.jones.h;
      env[1][i] += rot * t.jones.v;
    }
  }
  return env;
}

Complex windowed_bin(const std::vector<Complex>& signal, double freq,
                     double dt) {
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < signal.size(); ++i) {
    acc += signal[i] * std::polar(1.0, -kTwoPi * freq * i * dt);
  }
  return acc / static_cast<double>(signal.size());
}

}  // namespace

double detector_mean_sampled(const BenchGraph& graph,
                             const std::string& detector,
                             const SamplingConfig& cfg) {
  const PropagationResult result = propagate(graph);
  const PortField& pf = detector_field(result, detector);
  const BenchParams& params = result.params;
  const int n = checked_sample_count(cfg, params);
  const double dt = 1.0 / cfg.sample_rate;

  double total = 0.0;
  int occupied = 0;
  for (int parity = 0; parity < 2; ++parity) {
    if (!class_occupied(pf, parity)) continue;
    ++occupied;
    const auto env = synth_envelope_hv(pf, parity, params, n, dt);
    std::vector<Complex> intensity(n);
    for (int i = 0; i < n; ++i) {
      intensity[i] = std::norm(env[0][i]) + std::norm(env[1][i]);
    }
    // Distinct beat notes present in the photocurrent.
    std::set<int> diffs;
    for (const FieldTerm& ta : pf.terms) {
      for (const FieldTerm& tb : pf.terms) {
        diffs.insert(ta.freq_offset - tb.freq_offset);
      }
    }
    // Reconstruct the gated sample at in-slot time tau from the beat-note
    // Fourier coefficients (the window holds each note exactly on a bin).
    Complex value{0.0, 0.0};
    for (int d : diffs) {
      const double freq = d * params.delta_f;
      const Complex c = windowed_bin(intensity, freq, dt);
      value += c * std::polar(1.0, kTwoPi * freq * params.tau);
    }
    total += value.real();
  }
  return occupied == 0 ? 0.0 : total / occupied;
}

namespace {

RawCorrelation correlate_graph_sampled(const BenchGraph& graph,
                                       const std::string& det_a,
                                       const std::string& det_b,
                                       const SamplingConfig& cfg,
                                       std::vector<Complex>* product_out) {
  const PropagationResult result = propagate(graph);
  const BenchParams& params = result.params;
  const PortField a = with_detection_phase(detector_field(result, det_a), params);
  const PortField b = with_detection_phase(detector_field(result, det_b), params);
  const int n = checked_sample_count(cfg, params);
  const double dt = 1.0 / cfg.sample_rate;

  RawCorrelation out;
  int joint = 0;
  for (int parity = 0; parity < 2; ++parity) {
    if (!class_occupied(a, parity) || !class_occupied(b, parity)) continue;
    ++joint;
    const std::vector<Complex> ea = synth_envelope(a, parity, params, n, dt);
    const std::vector<Complex> eb = synth_envelope(b, parity, params, n, dt);
    std::vector<Complex> product(n);
    for (int i = 0; i < n; ++i) product[i] = ea[i] * eb[i];
    // The gate: DC selection of the product signal. Kept pairs have
    // cancelling offsets; dropped pairs beat at +-2 delta_f.
    const Complex dc = windowed_bin(product, 0.0, dt);
    out.gated += std::norm(dc);
    double power = 0.0;
    for (const Complex& p : product) power += std::norm(p);
    out.ungated += power / n;
    if (product_out) *product_out = std::move(product);
  }
  if (joint > 0) {
    out.gated /= joint;
    out.ungated /= joint;
  }
  return out;
}

}  // namespace

CorrelationResult gated_correlation_sampled(const BenchGraph& graph,
                                            const std::string& det_a,
                                            const std::string& det_b,
                                            const SamplingConfig& cfg) {
  if (!graph.detectors.count(det_a) || !graph.detectors.count(det_b)) {
    throw std::invalid_argument("unknown detector in correlation pair");
  }
  require_cross_party(graph, det_a, det_b);

  CorrelationResult res;
  res.det_a = det_a;
  res.det_b = det_b;
  res.pipeline = Pipeline::Sampled;
  const RawCorrelation raw =
      correlate_graph_sampled(graph, det_a, det_b, cfg, nullptr);
  res.gated_value = raw.gated;
  res.ungated_value = raw.ungated;
  res.phi_grid = default_phi_grid();
  res.per_phi_values.reserve(res.phi_grid.size());
  for (double phi : res.phi_grid) {
    BenchGraph scan = graph;
    set_phi(scan, phi);
    res.per_phi_values.push_back(
        correlate_graph_sampled(scan, det_a, det_b, cfg, nullptr).gated);
  }
  return res;
}

std::vector<std::pair<double, double>> product_power_spectrum(
    const BenchGraph& graph, const std::string& det_a,
    const std::string& det_b, const SamplingConfig& cfg) {
  require_cross_party(graph, det_a, det_b);
  std::vector<Complex> product;
  correlate_graph_sampled(graph, det_a, det_b, cfg, &product);
  const int n = static_cast<int>(product.size());
  const double dt = 1.0 / cfg.sample_rate;
  const double bin_hz = 1.0 / cfg.duration;
  std::vector<std::pair<double, double>> spectrum;
  spectrum.reserve(n);
  for (int k = 0; k < n; ++k) {
    // Map bin index to signed frequency.
    const int signed_k = k <= n / 2 ? k : k - n;
    const double freq = signed_k * bin_hz;
    const Complex bin = windowed_bin(product, freq, dt);
    spectrum.emplace_back(freq / graph.params.delta_f, std::norm(bin));
  }
  std::sort(spectrum.begin(), spectrum.end());
  return spectrum;
}

// ---------------------------------------------------------------------------
// Correlation map and CHSH harness
// ---------------------------------------------------------------------------

std::vector<std::vector<double>> correlation_map(
    const BenchGraph& graph, const std::vector<double>& xi_grid,
    const std::vector<double>& theta_grid) {
  std::vector<std::vector<double>> map(xi_grid.size());
  for (std::size_t i = 0; i < xi_grid.size(); ++i) {
    map[i].resize(theta_grid.size());
    for (std::size_t j = 0; j < theta_grid.size(); ++j) {
      BenchGraph g = graph;
      set_polarizer_angles(g, xi_grid[i], theta_grid[j]);
      map[i][j] = correlate_graph(g, "s1", "i3").gated;
    }
  }
  return map;
}

namespace {

class RateEvaluator {
 public:
  RateEvaluator(const BenchGraph& graph, RateKind kind)
      : graph_(graph), kind_(kind) {}

  double rate(double xi, double theta) {
    const auto key = std::make_pair(xi, theta);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    BenchGraph g = graph_;
    set_polarizer_angles(g, xi, theta);
    const RawCorrelation raw = correlate_graph(g, "s1", "i3");
    const double r = kind_ == RateKind::Gated ? raw.gated : raw.ungated;
    cache_.emplace(key, r);
    return r;
  }

  double correlator(double xi, double theta) {
    const double h = kPi / 2.0;
    const double r00 = rate(xi, theta);
    const double r11 = rate(xi + h, theta + h);
    const double r10 = rate(xi + h, theta);
    const double r01 = rate(xi, theta + h);
    const double denom = r00 + r11 + r10 + r01;
    if (denom <= 1e-300) {
      throw std::runtime_error("chsh_E: degenerate all-zero rate sum");
    }
    return (r00 + r11 - r10 - r01) / denom;
  }

 private:
  const BenchGraph& graph_;
  RateKind kind_;
  std::map<std::pair<double, double>, double> cache_;
};

ChshResult evaluate_chsh(RateEvaluator& rates, double a, double a_prime,
                         double b, double b_prime) {
  ChshResult res;
  res.a = a;
  res.a_prime = a_prime;
  res.b = b;
  res.b_prime = b_prime;
  res.e_values = {rates.correlator(a, b), rates.correlator(a, b_prime),
                  rates.correlator(a_prime, b),
                  rates.correlator(a_prime, b_prime)};
  res.s = res.e_values[0] + res.e_values[1] + res.e_values[2] -
          res.e_values[3];
  return res;
}

}  // namespace

double chsh_E(const BenchGraph& graph, double xi_rad, double theta_rad,
              RateKind kind) {
  RateEvaluator rates(graph, kind);
  return rates.correlator(xi_rad, theta_rad);
}

ChshResult chsh_S(const BenchGraph& graph, double a, double a_prime, double b,
                  double b_prime, RateKind kind) {
  RateEvaluator rates(graph, kind);
  return evaluate_chsh(rates, a, a_prime, b, b_prime);
}

ChshResult chsh_max_search(const BenchGraph& graph, RateKind kind) {
  RateEvaluator rates(graph, kind);
  const double step_deg = 15.0;
  ChshResult best;
  best.s = -1e300;
  for (int ia = 0; ia < 12; ++ia) {
    for (int ip = 0; ip < 12; ++ip) {
      for (int ib = 0; ib < 12; ++ib) {
        for (int iq = 0; iq < 12; ++iq) {
          const ChshResult cand = evaluate_chsh(
              rates, deg2rad(ia * step_deg), deg2rad(ip * step_deg),
              deg2rad(ib * step_deg), deg2rad(iq * step_deg));
          if (cand.s > best.s) best = cand;
        }
      }
    }
  }

  // Coordinate descent with step halving.
  double step = deg2rad(step_deg);
  std::array<double, 4> angles{best.a, best.a_prime, best.b, best.b_prime};
  while (step > 1e-6) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int i = 0; i < 4; ++i) {
        for (double delta : {step, -step}) {
          std::array<double, 4> trial = angles;
          trial[i] += delta;
          const ChshResult cand =
              evaluate_chsh(rates, trial[0], trial[1], trial[2], trial[3]);
          if (cand.s > best.s + 1e-15) {
            best = cand;
            angles = trial;
            improved = true;
          }
        }
      }
    }
    step /= 2.0;
  }
  return best;
}

}  // namespace cohbench::detect
