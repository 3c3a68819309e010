#include "sonir/automation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sonir/error.hpp"

namespace sonir {

namespace {

double interpolate(double t0, double v0, double t1, double v1, double t) {
  if (t1 <= t0) return v1;
  return v0 + (v1 - v0) * ((t - t0) / (t1 - t0));
}

}  // namespace

void Automation::insert(const AutomationEvent& event) {
  if (!std::isfinite(event.time) || event.time < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "automation event time must be finite and >= 0");
  }
  for (const auto& e : events_) {
    if (e.time == event.time && e.kind == event.kind) {
      throw Error(ErrorCode::DuplicateEvent,
                  "an event of the same kind already exists at t=" + std::to_string(event.time));
    }
  }
  // After every event with time <= event.time: equal-time events keep
  // insertion order.
  auto pos = std::upper_bound(events_.begin(), events_.end(), event.time,
                              [](double t, const AutomationEvent& e) { return t < e.time; });
  events_.insert(pos, event);
}

double Automation::value_at(double t) const {
  // Last event at or before t.
  auto next = std::upper_bound(events_.begin(), events_.end(), t,
                               [](double time, const AutomationEvent& e) { return time < e.time; });
  const bool has_prev = next != events_.begin();
  const double prev_time = has_prev ? std::prev(next)->time : 0.0;
  const double prev_value = has_prev ? std::prev(next)->value : base_;
  if (next != events_.end() && next->kind == AutomationKind::LinearRampToValueAtTime) {
    return interpolate(prev_time, prev_value, next->time, next->value, t);
  }
  return prev_value;
}

void Automation::fill(std::span<double> out, std::int64_t first_frame, double sample_rate) const {
  if (events_.empty()) {
    std::fill(out.begin(), out.end(), base_);
    return;
  }
  const double t_first = static_cast<double>(first_frame) / sample_rate;
  std::size_t next = static_cast<std::size_t>(
      std::upper_bound(events_.begin(), events_.end(), t_first,
                       [](double time, const AutomationEvent& e) { return time < e.time; }) -
      events_.begin());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = static_cast<double>(first_frame + static_cast<std::int64_t>(k)) / sample_rate;
    while (next < events_.size() && events_[next].time <= t) ++next;
    const bool has_prev = next > 0;
    const double prev_time = has_prev ? events_[next - 1].time : 0.0;
    const double prev_value = has_prev ? events_[next - 1].value : base_;
    if (next < events_.size() && events_[next].kind == AutomationKind::LinearRampToValueAtTime) {
      out[k] = interpolate(prev_time, prev_value, events_[next].time, events_[next].value, t);
    } else {
      out[k] = prev_value;
    }
  }
}

}  // namespace sonir
