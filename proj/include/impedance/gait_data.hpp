#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "impedance/errors.hpp"
#include "impedance/gait_cycle.hpp"
#include "impedance/impedance_core.hpp"

namespace impedance {

enum class PhaseUnit { kAuto, kFraction, kPercent, kSample };

/// Column names to read. An empty velocity column means "differentiate the
/// angle"; an empty torque column yields a zero torque channel.
struct CsvSchema {
  std::string phase = "phase";
  std::string angle = "angle";
  std::string velocity;
  std::string torque = "torque";
  PhaseUnit phase_unit = PhaseUnit::kAuto;
  double cycle_duration = 1.0;  // seconds, used when velocity is derived
  JointLabel joint = JointLabel::kAnkle;
  std::string units_note;
};

/// Central differences in the interior and three-point one-sided
/// differences at both ends, scaled to rad/s by the cycle duration.
inline std::vector<double> estimate_velocity(std::span<const double> angle, std::span<const double> phase,
                                             double cycle_duration = 1.0) {
  const std::size_t n = angle.size();
  if (phase.size() != n) throw DomainError("angle and phase lengths differ");
  if (n < 3) throw DomainError("velocity estimation needs at least 3 samples");
  if (!(cycle_duration > 0.0)) throw DomainError("cycle duration must be positive");

  std::vector<double> v(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    // Non-uniform three-point stencil, second order.
    const double h0 = phase[i] - phase[i - 1];
    const double h1 = phase[i + 1] - phase[i];
    v[i] = (-h1 / (h0 * (h0 + h1))) * angle[i - 1] + ((h1 - h0) / (h0 * h1)) * angle[i] +
           (h0 / (h1 * (h0 + h1))) * angle[i + 1];
  }
  {
    const double h0 = phase[1] - phase[0];
    const double h1 = phase[2] - phase[1];
    v[0] = (-(2.0 * h0 + h1) / (h0 * (h0 + h1))) * angle[0] + ((h0 + h1) / (h0 * h1)) * angle[1] -
           (h0 / (h1 * (h0 + h1))) * angle[2];
  }
  {
    const double h0 = phase[n - 2] - phase[n - 3];
    const double h1 = phase[n - 1] - phase[n - 2];
    v[n - 1] = (h1 / (h0 * (h0 + h1))) * angle[n - 3] - ((h0 + h1) / (h0 * h1)) * angle[n - 2] +
               ((2.0 * h1 + h0) / (h1 * (h0 + h1))) * angle[n - 1];
  }
  for (double& x : v) x /= cycle_duration;
  return v;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (!out.empty() && out.front().size() >= 3 && out.front().substr(0, 3) == "\xEF\xBB\xBF")
    out.front().remove_prefix(3);
  return out;
}

inline double parse_cell(std::string_view cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value))
    throw DataError(DataError::Kind::kInvalidCell,
                    "invalid value '" + std::string(cell) + "' in column '" + column + "' at row " +
                        std::to_string(row),
                    row, column);
  return value;
}

inline double phase_scale(std::span<const double> raw, PhaseUnit unit) {
  const double hi = raw.back();
  switch (unit) {
    case PhaseUnit::kFraction: return 1.0;
    case PhaseUnit::kPercent: return 100.0;
    case PhaseUnit::kSample: return hi;
    case PhaseUnit::kAuto: break;
  }
  if (hi <= 1.0) return 1.0;
  if (hi <= 100.0) return 100.0;
  return hi;  // sample index
}

}  // namespace detail

/// Reads one gait cycle from a headed CSV file. Blank lines and lines
/// starting with '#' are skipped.
inline GaitCycleData load_gait_csv(const std::filesystem::path& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::kMissingFile, "cannot open gait data file '" + path.string() + "'");

  std::string line;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, line)) {
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    header_line = std::string(t);
    header = detail::split_csv(header_line);
    break;
  }
  if (header.empty()) throw DataError(DataError::Kind::kTooFewRows, "'" + path.string() + "' has no header row");

  auto column_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError(DataError::Kind::kMissingColumn,
                    "column '" + name + "' not found in '" + path.string() + "'", 0, name);
  };
  const std::size_t npos = static_cast<std::size_t>(-1);
  const std::size_t ip = column_index(schema.phase);
  const std::size_t ia = column_index(schema.angle);
  const std::size_t iv = schema.velocity.empty() ? npos : column_index(schema.velocity);
  const std::size_t it = schema.torque.empty() ? npos : column_index(schema.torque);

  std::vector<double> phase, angle, velocity, torque;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    ++row;
    auto cells = detail::split_csv(t);
    auto cell = [&](std::size_t idx, const std::string& name) {
      if (idx >= cells.size())
        throw DataError(DataError::Kind::kInvalidCell,
                        "row " + std::to_string(row) + " has no value for column '" + name + "'", row, name);
      return detail::parse_cell(cells[idx], row, name);
    };
    phase.push_back(cell(ip, schema.phase));
    angle.push_back(cell(ia, schema.angle));
    if (iv != npos) velocity.push_back(cell(iv, schema.velocity));
    torque.push_back(it != npos ? cell(it, schema.torque) : 0.0);
  }
  if (phase.size() < 2)
    throw DataError(DataError::Kind::kTooFewRows, "'" + path.string() + "' has fewer than 2 data rows",
                    phase.size());
  for (std::size_t i = 1; i < phase.size(); ++i)
    if (!(phase[i] > phase[i - 1]))
      throw DataError(DataError::Kind::kNonMonotonePhase,
                      "phase column '" + schema.phase + "' is not strictly increasing at row " + std::to_string(i + 1),
                      i + 1, schema.phase);

  const double scale = detail::phase_scale(phase, schema.phase_unit);
  for (double& p : phase) p /= scale;
  constexpr double kEndpointSlack = 1e-9;
  if (std::abs(phase.front()) > kEndpointSlack || std::abs(phase.back() - 1.0) > kEndpointSlack)
    throw DataError(DataError::Kind::kShape, "phase column '" + schema.phase + "' does not span a full gait cycle");
  phase.front() = 0.0;
  phase.back() = 1.0;

  if (iv == npos) velocity = estimate_velocity(angle, phase, schema.cycle_duration);
  return GaitCycleData(std::move(phase), std::move(angle), std::move(velocity), std::move(torque), schema.joint,
                       schema.units_note);
}

/// Linear interpolation of every channel onto n uniformly spaced phases.
inline GaitCycleData resample(const GaitCycleData& d, std::size_t n) {
  if (n < 2) throw DomainError("resample needs at least 2 points");
  const auto& src = d.phase();
  std::vector<double> phase(n), angle(n), velocity(n), torque(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i + 1 == n ? 1.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    phase[i] = t;
    auto hi = static_cast<std::size_t>(std::upper_bound(src.begin(), src.end(), t) - src.begin());
    if (hi >= src.size()) {
      angle[i] = d.angle().back();
      velocity[i] = d.velocity().back();
      torque[i] = d.torque().back();
      continue;
    }
    const std::size_t lo = hi - 1;
    const double w = (t - src[lo]) / (src[hi] - src[lo]);
    auto lerp = [&](const std::vector<double>& c) { return w == 0.0 ? c[lo] : c[lo] + w * (c[hi] - c[lo]); };
    angle[i] = lerp(d.angle());
    velocity[i] = lerp(d.velocity());
    torque[i] = lerp(d.torque());
  }
  return GaitCycleData(std::move(phase), std::move(angle), std::move(velocity), std::move(torque), d.joint(),
                       d.units_note());
}

struct SyntheticSpec {
  ImpedanceParameters ground_truth;
  GaitCycleData kinematics;  // torque channel ignored
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

/// Torque generated by the impedance law on the given kinematics, plus
/// seeded Gaussian noise.
inline GaitCycleData synthesize(const SyntheticSpec& spec) {
  if (!(spec.noise_std >= 0.0)) throw DomainError("noise_std must be >= 0");
  auto report = validate(spec.ground_truth, 1001);
  if (!report.satisfied()) throw InvariantError("ground-truth parameters violate impedance constraints");

  const auto& k = spec.kinematics;
  auto tau = torque_trajectory(spec.ground_truth, k);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double& x : tau) {
    const double z = noise(rng);
    if (spec.noise_std > 0.0) x += spec.noise_std * z;
  }
  return k.with_torque(std::move(tau));
}

}  // namespace impedance
