#include "cohbench/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <tuple>

namespace cohbench {

const char* to_string(Origin o) {
  switch (o) {
    case Origin::Upper: return "upper";
    case Origin::Lower: return "lower";
    default: return "unassigned";
  }
}

const char* to_string(SlotParity p) {
  return p == SlotParity::Even ? "even" : "odd";
}

bool JonesVec::is_unit(double tol) const {
  return std::abs(norm2() - 1.0) <= tol;
}

JonesVec jones_h() { return JonesVec{{1.0, 0.0}, {0.0, 0.0}}; }
JonesVec jones_v() { return JonesVec{{0.0, 0.0}, {1.0, 0.0}}; }

JonesVec jones_linear(double angle_rad) {
  return JonesVec{{std::cos(angle_rad), 0.0}, {std::sin(angle_rad), 0.0}};
}

FieldTerm canonical(FieldTerm t) {
  const Complex dom =
      std::norm(t.jones.h) >= std::norm(t.jones.v) ? t.jones.h : t.jones.v;
  const double mag = std::abs(dom);
  if (mag > 0.0) {
    const Complex phase = dom / mag;
    t.jones.h /= phase;
    t.jones.v /= phase;
    t.amplitude *= phase;
    // Scrub the -0.0 and 1e-300 dust left by the division so label
    // comparison and ordering stay stable.
    auto scrub = [](Complex& c) {
      double re = c.real(), im = c.imag();
      if (std::abs(re) < 1e-15) re = 0.0;
      if (std::abs(im) < 1e-15) im = 0.0;
      c = {re, im};
    };
    scrub(t.jones.h);
    scrub(t.jones.v);
  }
  return t;
}

namespace {

std::tuple<int, int, int, int, double, double, double, double> label_key(
    const FieldTerm& t) {
  return {static_cast<int>(t.origin), t.freq_offset,
          static_cast<int>(t.slot_parity), t.slot_shift,
          t.jones.h.real(), t.jones.h.imag(),
          t.jones.v.real(), t.jones.v.imag()};
}

bool jones_close(const JonesVec& a, const JonesVec& b, double tol) {
  return std::abs(a.h - b.h) <= tol && std::abs(a.v - b.v) <= tol;
}

}  // namespace

bool same_labels(const FieldTerm& a, const FieldTerm& b, double tol) {
  if (a.origin != b.origin || a.freq_offset != b.freq_offset ||
      a.slot_parity != b.slot_parity || a.slot_shift != b.slot_shift) {
    return false;
  }
  return jones_close(canonical(a).jones, canonical(b).jones, tol);
}

PortField merge_terms(const PortField& pf) {
  PortField out;
  out.port = pf.port;
  std::vector<FieldTerm> terms;
  terms.reserve(pf.terms.size());
  for (const FieldTerm& t : pf.terms) terms.push_back(canonical(t));
  std::stable_sort(terms.begin(), terms.end(),
                   [](const FieldTerm& a, const FieldTerm& b) {
                     return label_key(a) < label_key(b);
                   });
  for (const FieldTerm& t : terms) {
    if (!out.terms.empty() && same_labels(out.terms.back(), t)) {
      out.terms.back().amplitude += t.amplitude;
    } else {
      out.terms.push_back(t);
    }
  }
  std::erase_if(out.terms, [](const FieldTerm& t) {
    return std::abs(t.amplitude) == 0.0;
  });
  return out;
}

double instantaneous_intensity(const PortField& pf, double t, long slot,
                               const BenchParams& params) {
  Complex sum_h{0.0, 0.0};
  Complex sum_v{0.0, 0.0};
  for (const FieldTerm& term : pf.terms) {
    if (!term.occupies(slot)) continue;
    const double w = kTwoPi * term.freq_offset * params.delta_f * t;
    const Complex rot = term.amplitude * std::polar(1.0, w);
    sum_h += rot * term.jones.h;
    sum_v += rot * term.jones.v;
  }
  return std::norm(sum_h) + std::norm(sum_v);
}

namespace {

// Per-parity-class mean: coherent within each freq_offset group,
// incoherent across groups.
double class_mean(const PortField& pf, int parity) {
  std::map<int, std::array<Complex, 2>> by_offset;
  bool occupied = false;
  for (const FieldTerm& t : pf.terms) {
    if (t.parity_index() != parity) continue;
    occupied = true;
    auto& acc = by_offset[t.freq_offset];
    acc[0] += t.amplitude * t.jones.h;
    acc[1] += t.amplitude * t.jones.v;
  }
  if (!occupied) return -1.0;
  double sum = 0.0;
  for (const auto& [offset, acc] : by_offset) {
    sum += std::norm(acc[0]) + std::norm(acc[1]);
  }
  return sum;
}

}  // namespace

double mean_intensity(const PortField& pf, const BenchParams&) {
  double total = 0.0;
  int occupied = 0;
  for (int parity = 0; parity < 2; ++parity) {
    const double m = class_mean(pf, parity);
    if (m >= 0.0) {
      total += m;
      ++occupied;
    }
  }
  return occupied == 0 ? 0.0 : total / occupied;
}

double occupancy_fraction(const PortField& pf) {
  bool occ[2] = {false, false};
  for (const FieldTerm& t : pf.terms) occ[t.parity_index()] = true;
  return (static_cast<int>(occ[0]) + static_cast<int>(occ[1])) / 2.0;
}

double wallclock_mean_intensity(const PortField& pf,
                                const BenchParams& params) {
  return mean_intensity(pf, params) * occupancy_fraction(pf);
}

PortField with_detection_phase(const PortField& pf,
                               const BenchParams& params) {
  PortField out = pf;
  for (FieldTerm& t : out.terms) {
    const double w = kTwoPi * t.freq_offset * params.delta_f * params.tau;
    t.amplitude *= std::polar(1.0, w);
  }
  return out;
}

std::vector<ProductPair> product_term_pairs(const PortField& a,
                                            const PortField& b) {
  std::vector<ProductPair> pairs;
  pairs.reserve(a.terms.size() * b.terms.size());
  for (const FieldTerm& ta : a.terms) {
    for (const FieldTerm& tb : b.terms) {
      ProductPair p;
      p.a = ta;
      p.b = tb;
      p.net_offset = ta.freq_offset + tb.freq_offset;
      p.amplitude = ta.amplitude * tb.amplitude;
      pairs.push_back(p);
    }
  }
  return pairs;
}

}  // namespace cohbench
