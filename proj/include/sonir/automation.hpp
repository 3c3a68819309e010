#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sonir {

enum class AutomationKind { SetValueAtTime, LinearRampToValueAtTime };

struct AutomationEvent {
  AutomationKind kind = AutomationKind::SetValueAtTime;
  double time = 0.0;
  double value = 0.0;
};

/// Piecewise-constant / piecewise-linear parameter timeline.
///
/// Events are kept ordered by time. Two events of the same kind at the same
/// time are rejected; events of different kinds at the same time keep their
/// insertion order, so a set issued after a ramp ending at the same instant
/// wins from that instant on.
///
/// Before the first event the base value holds. A ramp that is the first
/// event interpolates from (0, base value).
class Automation {
public:
  explicit Automation(double base_value = 0.0) : base_(base_value) {}

  double base_value() const noexcept { return base_; }
  void set_base_value(double v) noexcept { base_ = v; }

  const std::vector<AutomationEvent>& events() const noexcept { return events_; }

  /// Throws Error{DuplicateEvent} or Error{InvalidArgument} (negative or
  /// non-finite time).
  void insert(const AutomationEvent& event);

  double value_at(double t) const;

  /// Writes the value at times (first_frame + k) / sample_rate for each k.
  /// Walks the event list once per call instead of searching per sample.
  void fill(std::span<double> out, std::int64_t first_frame, double sample_rate) const;

private:
  double base_;
  std::vector<AutomationEvent> events_;
};

}  // namespace sonir
