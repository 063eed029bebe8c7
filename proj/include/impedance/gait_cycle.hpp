#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "impedance/errors.hpp"

namespace impedance {

enum class JointLabel { kAnkle, kKnee, kOther };

inline std::string_view to_string(JointLabel j) {
  switch (j) {
    case JointLabel::kAnkle: return "ankle";
    case JointLabel::kKnee: return "knee";
    default: return "other";
  }
}

inline JointLabel joint_from_string(std::string_view s) {
  if (s == "ankle") return JointLabel::kAnkle;
  if (s == "knee") return JointLabel::kKnee;
  return JointLabel::kOther;
}

/// One averaged gait cycle sampled over normalized phase t in [0, 1].
///
/// Channels are stored as plain vectors; the constructor enforces equal
/// lengths (>= 2), phase strictly increasing from exactly 0 to exactly 1,
/// and finite values everywhere. Torque units are carried in `units_note`
/// and never converted.
class GaitCycleData {
 public:
  GaitCycleData(std::vector<double> phase, std::vector<double> angle, std::vector<double> velocity,
                std::vector<double> torque, JointLabel joint = JointLabel::kAnkle, std::string units_note = {})
      : phase_(std::move(phase)),
        angle_(std::move(angle)),
        velocity_(std::move(velocity)),
        torque_(std::move(torque)),
        joint_(joint),
        units_note_(std::move(units_note)) {
    check();
  }

  const std::vector<double>& phase() const noexcept { return phase_; }
  const std::vector<double>& angle() const noexcept { return angle_; }
  const std::vector<double>& velocity() const noexcept { return velocity_; }
  const std::vector<double>& torque() const noexcept { return torque_; }
  JointLabel joint() const noexcept { return joint_; }
  const std::string& units_note() const noexcept { return units_note_; }
  std::size_t size() const noexcept { return phase_.size(); }

  /// Same kinematics with a replaced torque channel.
  GaitCycleData with_torque(std::vector<double> torque) const {
    return GaitCycleData(phase_, angle_, velocity_, std::move(torque), joint_, units_note_);
  }

 private:
  void check() const {
    const std::size_t n = phase_.size();
    if (angle_.size() != n || velocity_.size() != n || torque_.size() != n)
      throw DataError(DataError::Kind::kShape, "gait channels must have equal length");
    if (n < 2) throw DataError(DataError::Kind::kTooFewRows, "gait cycle needs at least 2 samples");
    if (phase_.front() != 0.0 || phase_.back() != 1.0)
      throw DataError(DataError::Kind::kShape, "phase must start at 0 and end at 1");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(phase_[i]) || !std::isfinite(angle_[i]) || !std::isfinite(velocity_[i]) ||
          !std::isfinite(torque_[i]))
        throw DataError(DataError::Kind::kInvalidCell, "non-finite sample at index " + std::to_string(i), i + 1);
      if (i > 0 && !(phase_[i] > phase_[i - 1]))
        throw DataError(DataError::Kind::kNonMonotonePhase,
                        "phase not strictly increasing at index " + std::to_string(i), i + 1);
    }
  }

  std::vector<double> phase_;
  std::vector<double> angle_;
  std::vector<double> velocity_;
  std::vector<double> torque_;
  JointLabel joint_;
  std::string units_note_;
};

}  // namespace impedance
