#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "impedance/impedance_core.hpp"

/// Published ankle reference values for the four equilibrium sectioning
/// schemes (A: four sections, B: three, C: two, D: one). Coefficients are
/// listed highest power first as tabulated; units are left unstated.
namespace impedance::reference {

struct SetFixture {
  char label;
  std::vector<double> boundaries;
  std::vector<double> optimized_angles;
  std::vector<double> tuned_angles;
  std::vector<double> stiffness_desc;  // k4 .. k0
  std::vector<double> damping_desc;    // d4 .. d0
  double alpha;
  double beta;
  double gamma;
};

inline const std::array<SetFixture, 4>& sets() {
  static const std::array<SetFixture, 4> kSets{{
      {'A',
       {0.0, 0.13, 0.40, 0.63, 1.0},
       {0.0294, -0.3428, -0.3491, 0.3029},
       {0.0100, -0.0875, -0.3490, 0.0873},
       {-29870.57, 28322.46, -7061.82, 586.04, 2.21},
       {-22.45, 88.08, -76.20, 18.76, 0.12},
       0.4, 0.2, 20.0},
      {'B',
       {0.0, 0.40, 0.63, 1.0},
       {-0.4258, -0.4363, 0.0000},
       {-0.1745, -0.2617, 0.0000},
       {-19977.92, 17340.71, -3424.51, 199.97, 0.32},
       {-140.21, 261.35, -158.46, 31.21, 0.12},
       0.5, 0.166, 20.0},
      {'C',
       {0.0, 0.63, 1.0},
       {-0.4363, 0.1453},
       {-0.2617, 0.1452},
       {-19822.71, 17146.19, -3333.05, 181.16, 0.75},
       {-164.32, 303.05, -181.22, 35.04, 0.18},
       0.5, 0.166, 20.0},
      {'D',
       {0.0, 1.0},
       {-0.4655},
       {-0.2617},
       {-16520.32, 14144.17, -2596.67, 136.56, 0.00},
       {-171.23, 311.36, -182.97, 34.53, 0.26},
       0.5, 0.166, 20.0},
  }};
  return kSets;
}

inline const SetFixture& set(char label) {
  for (const auto& s : sets())
    if (s.label == label) return s;
  throw std::invalid_argument(std::string("unknown equilibrium set '") + label + "'");
}

inline EquilibriumSchedule optimized_schedule(char label) {
  const auto& s = set(label);
  return EquilibriumSchedule(s.boundaries, s.optimized_angles, std::string(1, label));
}

inline ImpedanceParameters parameters(char label, double stance_end = kDefaultStanceEnd) {
  const auto& s = set(label);
  return ImpedanceParameters(ImpedanceProfile::from_descending(s.stiffness_desc, stance_end),
                             ImpedanceProfile::from_descending(s.damping_desc, stance_end),
                             optimized_schedule(label));
}

}  // namespace impedance::reference
