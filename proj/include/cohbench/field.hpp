#pragma once

#include <complex>
#include <string>
#include <vector>

namespace cohbench {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Default absolute tolerance for field/intensity comparisons.
inline constexpr double kTol = 1e-12;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

enum class Origin { Unassigned, Upper, Lower };
enum class SlotParity { Even = 0, Odd = 1 };

const char* to_string(Origin o);
const char* to_string(SlotParity p);

/// Unit polarization direction in the lab H/V basis. The magnitude of a
/// field component lives in FieldTerm::amplitude, not here.
struct JonesVec {
  Complex h{1.0, 0.0};
  Complex v{0.0, 0.0};

  double norm2() const { return std::norm(h) + std::norm(v); }
  bool is_unit(double tol = kTol) const;
};

JonesVec jones_h();
JonesVec jones_v();
/// Linear polarization at `angle_rad` counterclockwise from H.
JonesVec jones_linear(double angle_rad);

/// One labeled plane-wave component of the field at a port.
///
/// freq_offset counts AOM detunings in units of delta_f. Slot occupancy is
/// a parity class shifted by slot_shift: the term is present in physical
/// slot k iff (k - slot_shift) mod 2 == slot_parity.
struct FieldTerm {
  Complex amplitude{0.0, 0.0};  // units sqrt(intensity)
  JonesVec jones;
  Origin origin = Origin::Unassigned;
  int freq_offset = 0;
  int slot_shift = 0;
  SlotParity slot_parity = SlotParity::Even;

  /// Effective occupancy parity (0 even slots, 1 odd slots).
  int parity_index() const {
    return (((static_cast<int>(slot_parity) + slot_shift) % 2) + 2) % 2;
  }
  bool occupies(long slot) const {
    return ((slot % 2) + 2) % 2 == parity_index();
  }
};

/// Factor the phase of the dominant jones component into the amplitude so
/// that equal polarization states compare componentwise.
FieldTerm canonical(FieldTerm t);

/// True when every label (jones, origin, freq_offset, slot_parity,
/// slot_shift) matches; amplitudes are not compared.
bool same_labels(const FieldTerm& a, const FieldTerm& b, double tol = kTol);

/// The multiset of field terms present at one optical port.
struct PortField {
  std::string port;
  std::vector<FieldTerm> terms;

  bool empty() const { return terms.empty(); }
};

/// All scalar knobs of a bench. Angles and phases in radians; f0 is the
/// symbolic carrier reference (never used numerically - everything is
/// computed in the rotating frame at f0).
struct BenchParams {
  double e0 = 1.0;
  double f0 = 0.0;
  double delta_f = 1.0;
  double t_e = 1.0;
  double psi = 0.0;
  double zeta = 0.0;
  double tau = 0.0;
  double xi = 0.0;
  double theta = 0.0;
  double alpha = 0.0;  // derived report, see derive_alpha()

  double i0() const { return e0 * e0; }
  double phi() const { return psi + zeta + kTwoPi * 2.0 * delta_f * tau; }
};

/// Combine terms with identical labels (amplitudes add), drop exact-zero
/// amplitudes, and order the list canonically. The represented field is
/// unchanged at every instant.
PortField merge_terms(const PortField& pf);

/// I(t) restricted to one physical slot: coherent sum per polarization
/// component of all terms occupying the slot, with each term rotating at
/// its offset frequency. Zero for unoccupied slots.
double instantaneous_intensity(const PortField& pf, double t, long slot,
                               const BenchParams& params);

/// Analytic time-and-slot average, normalized per occupied slot class.
/// Cross terms survive only between terms with equal freq_offset (an
/// unequal-offset cross term is a beat that integrates to zero over whole
/// beat periods).
double mean_intensity(const PortField& pf, const BenchParams& params);

/// Fraction of slot classes occupied (0, 1/2 or 1).
double occupancy_fraction(const PortField& pf);

/// Wall-clock average: mean_intensity scaled by the occupancy fraction.
double wallclock_mean_intensity(const PortField& pf, const BenchParams& params);

/// Beat-phase factor accrued by each term at detection time tau:
/// amplitude *= exp(i 2 pi freq_offset delta_f tau).
PortField with_detection_phase(const PortField& pf, const BenchParams& params);

/// One element of the two-detector field product.
struct ProductPair {
  FieldTerm a;
  FieldTerm b;
  int net_offset = 0;    // freq_offset_a + freq_offset_b
  Complex amplitude;     // product of the two amplitudes
};

/// Full cross product of term pairs between two polarizer-projected fields.
std::vector<ProductPair> product_term_pairs(const PortField& a,
                                            const PortField& b);

}  // namespace cohbench
