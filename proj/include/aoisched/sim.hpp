#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "aoisched/channel.hpp"
#include "aoisched/control.hpp"
#include "aoisched/penalty.hpp"
#include "aoisched/rng.hpp"
#include "aoisched/scheduler.hpp"
#include "aoisched/timing.hpp"

namespace aoisched {

// State magnitude beyond which a run is declared diverged.
inline constexpr double kDivergenceLimit = 1e150;

struct SubsystemSpec {
  PlantModel model;
  Slot period = 1;
};

struct SimConfig {
  std::vector<SubsystemSpec> subsystems;
  PolicyKind policy = PolicyKind::fh;
  int horizon = 1;
  Slot slots = 20000;
  int repetitions = 200;
  ChannelParams channel;
  std::uint64_t seed = 1;

  void validate() const {
    if (subsystems.empty()) throw std::invalid_argument("at least one sub-system is required");
    for (const auto& s : subsystems) {
      if (s.period < 1) throw std::invalid_argument("sampling period must be >= 1");
    }
    if (policy == PolicyKind::fh && horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (slots < 1) throw std::invalid_argument("slots must be >= 1");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (channel.stddev < 0.0) throw std::invalid_argument("channel stddev must be non-negative");
    if (channel.coherence < 1) throw std::invalid_argument("channel coherence must be >= 1");
  }
};

struct SubsystemMetrics {
  double error_sum = 0.0;  // sum over slots of the current period's squared error
  double aoi_sum = 0.0;    // sum over slots of the current period's age
  long transmissions = 0;
  long successes = 0;
};

struct MetricsAccumulator {
  std::vector<SubsystemMetrics> subsystems;
  long slots = 0;
  long idles = 0;
  long decisions = 0;
  double nodes_sum = 0.0;   // decision-tree nodes, summed over decisions
  double states_sum = 0.0;  // distinct states evaluated, summed over decisions
  long node_bound_violations = 0;
  bool diverged = false;
  Slot diverged_slot = -1;

  double mse(SubsystemId i) const { return subsystems.at(i).error_sum / static_cast<double>(slots); }
  double aoi_mean(SubsystemId i) const { return subsystems.at(i).aoi_sum / static_cast<double>(slots); }

  double network_mse() const {
    double s = 0.0;
    for (SubsystemId i = 0; i < subsystems.size(); ++i) s += mse(i);
    return s / static_cast<double>(subsystems.size());
  }
  double network_aoi() const {
    double s = 0.0;
    for (SubsystemId i = 0; i < subsystems.size(); ++i) s += aoi_mean(i);
    return s / static_cast<double>(subsystems.size());
  }
  double nodes_mean() const { return decisions > 0 ? nodes_sum / static_cast<double>(decisions) : 0.0; }
  double states_mean() const { return decisions > 0 ? states_sum / static_cast<double>(decisions) : 0.0; }

  long transmissions() const {
    long n = 0;
    for (const auto& s : subsystems) n += s.transmissions;
    return n;
  }
  long successes() const {
    long n = 0;
    for (const auto& s : subsystems) n += s.successes;
    return n;
  }
};

// What happened in one slot, for tracing and invariant checks.
struct SlotRecord {
  Slot t = 0;
  const TimingState* state = nullptr;  // network state observed by the scheduler
  std::span<const double> loss;
  Action action;
  bool success = false;
  std::uint64_t nodes = 0;
  std::span<const double> error;  // per sub-system squared error of the current period
  std::span<const Slot> aoi;      // per sub-system age of the current period
};

using SlotObserver = std::function<void(const SlotRecord&)>;

// Sampling offsets of one repetition, uniform on {0, ..., D_i - 1}.
inline std::vector<SamplingCalendar> draw_calendars(const SimConfig& cfg, std::uint64_t repetition) {
  Engine rng(stream_seed(cfg.seed, repetition, Stream::offsets));
  std::vector<SamplingCalendar> out;
  for (const auto& s : cfg.subsystems) {
    std::uniform_int_distribution<Slot> offset(0, s.period - 1);
    out.emplace_back(s.period, offset(rng));
  }
  return out;
}

namespace detail {

// Plant, sensor buffer and estimation-based controller of one loop.
class ControlLoop {
 public:
  ControlLoop(const PlantModel& model, std::uint64_t noise_seed)
      : model_(&model),
        noise_(noise_seed),
        x_hat_(Vector::Zero(model.states())),
        u_(Vector::Zero(model.inputs())),
        sensor_(Vector::Zero(model.states())),
        received_(Vector::Zero(model.states())),
        utilized_(Vector::Zero(model.states())) {
    plant_.x = Vector::Zero(model.states());
  }

  // Sampling event opening period k. `times` already reflects this slot.
  // Returns false if the plant state left the representable range.
  bool on_sampling(const SamplingCalendar& cal, const PacketTimes& times, Slot t) {
    const Slot k = cal.sampling_index(t);
    if (k == 0) {
      plant_.x = draw_noise();
    } else {
      plant_ = plant_step(*model_, std::move(plant_), u_, draw_noise());
    }

    if (times.utilized >= cal.offset()) {
      const Slot age = period_aoi(cal, t, times.utilized);
      if (times.utilized != last_utilized_) {
        utilized_ = received_;
        x_hat_ = estimate(*model_, utilized_, age, plant_.inputs);
      } else {
        // Same payload one period older: one more Horner step of the estimate.
        x_hat_ = model_->A() * x_hat_ + model_->B() * u_;
      }
      last_utilized_ = times.utilized;
    }

    error_ = estimation_error(plant_.x, x_hat_);
    u_ = control_input(*model_, x_hat_);
    lqg_.add(plant_.x, u_, model_->Q(), model_->R());
    sensor_ = plant_.x;
    return plant_.x.allFinite() && plant_.x.cwiseAbs().maxCoeff() <= kDivergenceLimit;
  }

  void on_delivery() { received_ = sensor_; }

  double error() const noexcept { return error_; }
  const LqgCost& lqg() const noexcept { return lqg_; }

 private:
  Vector draw_noise() {
    Vector z(model_->states());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = gauss_(noise_);
    return model_->noise_factor() * z;
  }

  const PlantModel* model_;
  Engine noise_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  PlantState plant_;
  Vector x_hat_, u_;
  Vector sensor_, received_, utilized_;
  Slot last_utilized_ = std::numeric_limits<Slot>::min();
  double error_ = 0.0;
  LqgCost lqg_;
};

}  // namespace detail

// One repetition of the slotted simulation.
//
// Per slot: sampling events (generation, utilization, plant and controller
// update), scheduling on the observed state and loss vector, channel outcome,
// metric collection, then the reception takes effect in the next slot.
inline MetricsAccumulator run(const SimConfig& cfg, std::uint64_t repetition, const SlotObserver& observer = {}) {
  cfg.validate();
  const std::size_t n = cfg.subsystems.size();
  const auto calendars = draw_calendars(cfg, repetition);

  std::vector<detail::ControlLoop> loops;
  std::vector<PlantModel> models;
  models.reserve(n);
  for (const auto& s : cfg.subsystems) models.push_back(s.model);
  loops.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    loops.emplace_back(models[i], stream_seed(cfg.seed, repetition, Stream::plant_noise, i));
  }
  const PenaltyTable penalties = PenaltyTable::from_models(models);
  LossProcess channel(cfg.channel, n, cfg.seed, repetition);
  Policy policy(cfg.policy, cfg.horizon, n, stream_seed(cfg.seed, repetition, Stream::policy));
  const double node_bound = worst_case_nodes(n, policy.horizon());
  const bool tree_policy = cfg.policy == PolicyKind::fh || cfg.policy == PolicyKind::greedy;

  MetricsAccumulator m;
  m.subsystems.resize(n);
  std::vector<double> error(n, 0.0);
  std::vector<Slot> ages(n, 1);

  TimingState state = enter_slot(cold_start_state(calendars), calendars);
  for (Slot t = 0; t < cfg.slots; ++t) {
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (calendars[i].is_sampling_slot(t)) ok = loops[i].on_sampling(calendars[i], state.times[i], t) && ok;
      error[i] = calendars[i].sampling_index(t) >= 0 ? loops[i].error() : 0.0;
      ages[i] = period_aoi(calendars[i], t, state.times[i].utilized);
    }
    if (!ok) {
      m.diverged = true;
      m.diverged_slot = t;
      break;
    }

    channel.redraw_if_boundary(t);
    const auto loss = channel.observe();
    const SchedulerDecision d = policy.decide(state, calendars, penalties, loss);
    const bool success = !d.action.is_idle() && channel.transmit(d.action.subsystem(), t);

    ++m.slots;
    for (std::size_t i = 0; i < n; ++i) {
      m.subsystems[i].error_sum += error[i];
      m.subsystems[i].aoi_sum += static_cast<double>(ages[i]);
    }
    if (d.action.is_idle()) {
      ++m.idles;
    } else {
      auto& sm = m.subsystems[d.action.subsystem()];
      ++sm.transmissions;
      if (success) {
        ++sm.successes;
        loops[d.action.subsystem()].on_delivery();
      }
    }
    if (tree_policy) {
      ++m.decisions;
      m.nodes_sum += static_cast<double>(d.nodes_expanded);
      m.states_sum += static_cast<double>(d.distinct_states);
      if (static_cast<double>(d.nodes_expanded) > node_bound) ++m.node_bound_violations;
    }
    if (observer) observer(SlotRecord{t, &state, loss, d.action, success, d.nodes_expanded, error, ages});

    state = next_state(state, calendars, d.action, success);
  }
  return m;
}

}  // namespace aoisched
