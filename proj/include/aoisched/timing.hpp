#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace aoisched {

using Slot = std::int64_t;

// Index of a sub-system inside the network, zero based.
using SubsystemId = std::size_t;

// Floor and ceil of a / b for b > 0, rounding toward -inf / +inf.
constexpr Slot floor_div(Slot a, Slot b) noexcept {
  Slot q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return q;
}

constexpr Slot ceil_div(Slot a, Slot b) noexcept {
  Slot q = a / b;
  if ((a % b != 0) && (a > 0)) ++q;
  return q;
}

// Periodic sampling schedule of one sensor: samples at offset, offset + period, ...
class SamplingCalendar {
 public:
  SamplingCalendar(Slot period, Slot offset) : period_(period), offset_(offset) {
    if (period < 1) throw std::invalid_argument("sampling period must be >= 1");
    if (offset < 0 || offset >= period) throw std::invalid_argument("sampling offset must lie in [0, period)");
  }

  Slot period() const noexcept { return period_; }
  Slot offset() const noexcept { return offset_; }

  bool is_sampling_slot(Slot t) const noexcept {
    return t >= offset_ && (t - offset_) % period_ == 0;
  }

  // Sampling-period index k(t); negative before the first sample.
  Slot sampling_index(Slot t) const noexcept { return floor_div(t - offset_, period_); }

  // First slot of the sampling period that contains t.
  Slot period_start(Slot t) const noexcept { return offset_ + sampling_index(t) * period_; }

  // Generation time of the (virtual) sample preceding the first real one.
  // Used as the cold-start value of every timestamp.
  Slot cold_start() const noexcept { return offset_ - period_; }

 private:
  Slot period_;
  Slot offset_;
};

// Generation, reception and utilization times of one sub-system's freshest packet.
struct PacketTimes {
  Slot generated = 0;
  Slot received = 0;
  Slot utilized = 0;

  friend bool operator==(const PacketTimes&, const PacketTimes&) = default;
};

// Network state: slot index plus per sub-system timestamps.
struct TimingState {
  Slot t = 0;
  std::vector<PacketTimes> times;

  std::size_t size() const noexcept { return times.size(); }

  friend bool operator==(const TimingState&, const TimingState&) = default;
};

// Scheduling action: idle, or grant the slot to one sub-system.
class Action {
 public:
  constexpr Action() = default;
  static constexpr Action idle() { return Action{}; }
  static constexpr Action transmit(SubsystemId id) { return Action{id}; }

  constexpr bool is_idle() const noexcept { return id_ == kIdle; }
  constexpr SubsystemId subsystem() const noexcept { return id_; }

  friend constexpr bool operator==(Action, Action) = default;

 private:
  static constexpr SubsystemId kIdle = static_cast<SubsystemId>(-1);
  constexpr explicit Action(SubsystemId id) : id_(id) {}
  SubsystemId id_ = kIdle;
};

// Initial state at slot 0: every timestamp sits one period before the first sample.
inline TimingState cold_start_state(std::span<const SamplingCalendar> calendars) {
  TimingState s;
  s.t = 0;
  s.times.reserve(calendars.size());
  for (const auto& cal : calendars) {
    const Slot c = cal.cold_start();
    s.times.push_back({c, c, c});
  }
  return s;
}

// Zero-order hold of the sensor buffer when entering slot `entering`.
inline PacketTimes advance_generation(PacketTimes p, const SamplingCalendar& cal, Slot entering) noexcept {
  if (cal.is_sampling_slot(entering)) p.generated = entering;
  return p;
}

// Delivery outcome of the current slot, visible from the next slot on.
inline PacketTimes record_reception(PacketTimes p, bool scheduled, bool success) {
  if (success && !scheduled) throw std::logic_error("successful reception reported for an unscheduled sub-system");
  if (scheduled && success) p.received = p.generated;
  return p;
}

// The controller adopts the latest received packet only at sampling events.
inline PacketTimes utilize(PacketTimes p, const SamplingCalendar& cal, Slot entering) noexcept {
  if (cal.is_sampling_slot(entering)) p.utilized = p.received;
  return p;
}

// Per-slot age in sampling periods: ceil((t - t_u) / D).
inline Slot aoi(const SamplingCalendar& cal, Slot t, Slot utilized) noexcept {
  return ceil_div(t - utilized, cal.period());
}

// Age of the current sampling period, i.e. the age the controller used when it
// computed this period's input. Constant across the period and >= 1 once
// operation has started; slots before the first sample report 1.
inline Slot period_aoi(const SamplingCalendar& cal, Slot t, Slot utilized) noexcept {
  if (cal.sampling_index(t) < 0) return 1;
  return aoi(cal, cal.period_start(t), utilized);
}

// Idle plus every sub-system holding an undelivered packet, in index order.
inline std::vector<Action> admissible_actions(const TimingState& s) {
  std::vector<Action> out;
  out.push_back(Action::idle());
  for (SubsystemId i = 0; i < s.times.size(); ++i) {
    if (s.times[i].generated > s.times[i].received) out.push_back(Action::transmit(i));
  }
  return out;
}

inline bool is_admissible(const TimingState& s, Action a) noexcept {
  if (a.is_idle()) return true;
  return a.subsystem() < s.times.size() && s.times[a.subsystem()].generated > s.times[a.subsystem()].received;
}

// Whole-network transition from slot t to t+1 given the action and its outcome.
inline TimingState next_state(const TimingState& s, std::span<const SamplingCalendar> calendars, Action action,
                              bool success) {
  TimingState n;
  n.t = s.t + 1;
  n.times.resize(s.times.size());
  for (SubsystemId i = 0; i < s.times.size(); ++i) {
    const bool scheduled = !action.is_idle() && action.subsystem() == i;
    PacketTimes p = record_reception(s.times[i], scheduled, scheduled && success);
    p = advance_generation(p, calendars[i], n.t);
    n.times[i] = utilize(p, calendars[i], n.t);
  }
  return n;
}

// Applies sampling events that fall on the state's own slot (used at slot 0).
inline TimingState enter_slot(TimingState s, std::span<const SamplingCalendar> calendars) {
  for (SubsystemId i = 0; i < s.times.size(); ++i) {
    s.times[i] = advance_generation(s.times[i], calendars[i], s.t);
    s.times[i] = utilize(s.times[i], calendars[i], s.t);
  }
  return s;
}

}  // namespace aoisched
