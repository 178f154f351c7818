#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "aoisched/rng.hpp"
#include "aoisched/timing.hpp"

namespace aoisched {

struct ChannelParams {
  double mean = 0.3;       // mean of the Gaussian before clamping
  double stddev = 0.2;     // standard deviation before clamping
  Slot coherence = 30;     // slots per fading block
};

// Block-fading Bernoulli loss process, one link per sub-system.
//
// Loss probabilities are redrawn from a rectified (clamped to [0, 1]) Gaussian
// at every multiple of the coherence time. Each link owns two streams: one for
// fading draws and one for transmission outcomes. Outcomes are counter based on
// the slot index, so a link's outcome in slot t does not depend on how often it
// was scheduled before.
class LossProcess {
 public:
  LossProcess(ChannelParams params, std::size_t links, std::uint64_t master_seed, std::uint64_t repetition)
      : params_(params), loss_(links, 0.0) {
    if (params.stddev < 0.0) throw std::invalid_argument("channel stddev must be non-negative");
    if (params.coherence < 1) throw std::invalid_argument("channel coherence must be >= 1");
    fading_.reserve(links);
    outcome_seed_.reserve(links);
    for (std::size_t i = 0; i < links; ++i) {
      fading_.emplace_back(stream_seed(master_seed, repetition, Stream::fading, i));
      outcome_seed_.push_back(stream_seed(master_seed, repetition, Stream::outcome, i));
    }
  }

  const ChannelParams& params() const noexcept { return params_; }
  std::size_t links() const noexcept { return loss_.size(); }

  // Draws fresh loss probabilities when t starts a new block. Call once per slot,
  // in increasing slot order.
  void redraw_if_boundary(Slot t) {
    if (t % params_.coherence != 0) return;
    for (std::size_t i = 0; i < loss_.size(); ++i) {
      std::normal_distribution<double> gauss(params_.mean, params_.stddev > 0.0 ? params_.stddev : 1.0);
      const double x = params_.stddev > 0.0 ? gauss(fading_[i]) : params_.mean;
      loss_[i] = std::clamp(x, 0.0, 1.0);
    }
  }

  // Current loss probabilities. The coherence time itself is not exposed.
  std::span<const double> observe() const noexcept { return loss_; }

  // Outcome of transmitting on link i in slot t: true on successful delivery.
  bool transmit(std::size_t i, Slot t) const noexcept {
    const double u = to_unit(splitmix64(outcome_seed_[i] ^ static_cast<std::uint64_t>(t)));
    return u >= loss_[i];
  }

 private:
  ChannelParams params_;
  std::vector<double> loss_;
  std::vector<Engine> fading_;
  std::vector<std::uint64_t> outcome_seed_;
};

}  // namespace aoisched
