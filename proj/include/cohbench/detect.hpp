#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "cohbench/optics.hpp"

namespace cohbench::detect {

/// Mean photocurrent of a detector under gated heterodyne detection: the
/// slot-averaged intensity with the beat sampled at phase 2 pi (2 delta_f)
/// tau. Fields whose terms all share one frequency offset reduce to the
/// plain time average. Throws std::invalid_argument on unknown detector.
double detector_mean(const BenchGraph& graph, const std::string& detector);
double detector_mean(const PortField& field, const BenchParams& params);

/// (max - min) / (max + min) over a fringe trace of (phi, intensity)
/// points. All-zero traces give 0. The grid must hold at least two points
/// spanning at least half a period.
double fringe_visibility(const std::vector<std::pair<double, double>>& trace);

/// Override the interferometric phase by solving for psi:
/// psi = phi - zeta - 2 pi (2 delta_f) tau.
void set_phi(BenchGraph& graph, double phi_rad);

/// Override both polarizer angles (radians) through the reserved params.
void set_polarizer_angles(BenchGraph& graph, double xi_rad, double theta_rad);

/// Evenly spaced phase grid over [0, 2 pi).
std::vector<double> default_phi_grid(int n = 16);

enum class Pipeline { Analytic, Sampled };

/// A gated (or ungated) joint measurement between two detectors.
struct CorrelationResult {
  std::string det_a;
  std::string det_b;
  double gated_value = 0.0;
  double ungated_value = 0.0;
  std::vector<double> phi_grid;
  std::vector<double> per_phi_values;  // gated value at each grid phase
  Pipeline pipeline = Pipeline::Analytic;

  double phi_spread() const;
};

/// Sampling clock of the synthesized detection pipeline. The window must
/// cover a whole number of 1/(2 delta_f) beat periods and the rate must
/// clear Nyquist for the 2 delta_f beat with margin.
struct SamplingConfig {
  double sample_rate = 0.0;  // Hz
  double duration = 0.0;     // seconds

  static SamplingConfig defaults(const BenchParams& params);
};

/// Gate rule: keep field-product pairs whose frequency offsets cancel
/// (net_offset == 0); R = |sum of kept pair amplitudes|^2 per jointly
/// occupied slot class. The ungated value keeps every pair, with the beat
/// terms averaged out of the product power. Throws on detectors that are
/// not a cross-party pair.
CorrelationResult gated_correlation_analytic(const BenchGraph& graph,
                                             const std::string& det_a,
                                             const std::string& det_b);

/// Point values at the graph's current parameters, without the phi-grid
/// evidence sweep (used by parameter sweeps and the CHSH harness).
double gated_correlation_value(const BenchGraph& graph,
                               const std::string& det_a,
                               const std::string& det_b);
double ungated_correlation_value(const BenchGraph& graph,
                                 const std::string& det_a,
                                 const std::string& det_b);

/// Same observable from synthesized rotating-frame envelopes: the product
/// signal's DC component is the gate (dropped terms sit at +-2 delta_f).
CorrelationResult gated_correlation_sampled(const BenchGraph& graph,
                                            const std::string& det_a,
                                            const std::string& det_b,
                                            const SamplingConfig& cfg);

double detector_mean_sampled(const BenchGraph& graph,
                             const std::string& detector,
                             const SamplingConfig& cfg);

/// Power per DFT bin of the sampled two-detector product signal, as
/// (frequency in delta_f units, power) sorted by frequency.
std::vector<std::pair<double, double>> product_power_spectrum(
    const BenchGraph& graph, const std::string& det_a,
    const std::string& det_b, const SamplingConfig& cfg);

/// Gated correlation over a polarizer-angle grid (radians), analytic
/// pipeline, row index = xi, column index = theta.
std::vector<std::vector<double>> correlation_map(
    const BenchGraph& graph, const std::vector<double>& xi_grid,
    const std::vector<double>& theta_grid);

/// Which joint rate feeds the correlator.
enum class RateKind { Gated, Ungated };

/// Rate-sum normalized correlator over the four polarizer-rotated
/// combinations; equals cos 2(xi + theta) for gated rates of this bench
/// family.
double chsh_E(const BenchGraph& graph, double xi_rad, double theta_rad,
              RateKind kind = RateKind::Gated);

struct ChshResult {
  double a = 0.0;
  double a_prime = 0.0;
  double b = 0.0;
  double b_prime = 0.0;
  std::array<double, 4> e_values{};  // E(a,b), E(a,b'), E(a',b), E(a',b')
  double s = 0.0;
};

ChshResult chsh_S(const BenchGraph& graph, double a, double a_prime, double b,
                  double b_prime, RateKind kind = RateKind::Gated);

/// Coarse 15-degree grid over the four analyzer angles followed by
/// coordinate descent with step halving down to 1e-6 rad. Deterministic.
ChshResult chsh_max_search(const BenchGraph& graph,
                           RateKind kind = RateKind::Gated);

}  // namespace cohbench::detect
