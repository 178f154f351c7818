#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "aoisched/control.hpp"
#include "aoisched/timing.hpp"

namespace aoisched {

// Age penalty of one plant: g(age) = sum_{r=1}^{age-1} tr((A')^r A^r Sigma).
//
// Prefix sums are grown lazily and memoized, so repeated queries cost O(1)
// after the first time an age is reached.
class AgePenalty {
 public:
  AgePenalty(Matrix A, Matrix sigma) : A_(std::move(A)), sigma_(std::move(sigma)) {
    if (A_.rows() != A_.cols() || sigma_.rows() != A_.rows() || sigma_.cols() != A_.rows()) {
      throw std::invalid_argument("AgePenalty: A and Sigma must be square of equal size");
    }
    power_ = Matrix::Identity(A_.rows(), A_.cols());
    prefix_.push_back(0.0);  // g(1)
  }

  explicit AgePenalty(const PlantModel& model) : AgePenalty(model.A(), model.sigma()) {}

  double operator()(Slot age) const {
    if (age < 1) throw std::invalid_argument("age penalty is defined for age >= 1");
    const auto idx = static_cast<std::size_t>(age - 1);
    while (prefix_.size() <= idx) {
      power_ = A_ * power_;
      const double term = (power_.transpose() * power_ * sigma_).trace();
      prefix_.push_back(prefix_.back() + term);
    }
    return prefix_[idx];
  }

 private:
  Matrix A_;
  Matrix sigma_;
  mutable Matrix power_;  // A^r for r = prefix_.size() - 1
  mutable std::vector<double> prefix_;
};

// Penalties of every sub-system in the network.
class PenaltyTable {
 public:
  PenaltyTable() = default;
  explicit PenaltyTable(std::vector<AgePenalty> penalties) : penalties_(std::move(penalties)) {}

  template <class Models>
  static PenaltyTable from_models(const Models& models) {
    std::vector<AgePenalty> out;
    for (const PlantModel& m : models) out.emplace_back(m);
    return PenaltyTable(std::move(out));
  }

  std::size_t size() const noexcept { return penalties_.size(); }
  double g(SubsystemId i, Slot age) const { return penalties_.at(i)(age); }

 private:
  std::vector<AgePenalty> penalties_;
};

// Network state cost: sum over sub-systems of g_i evaluated at the age of the
// current sampling period.
inline double state_cost(const TimingState& s, std::span<const SamplingCalendar> calendars,
                         const PenaltyTable& penalties) {
  double c = 0.0;
  for (SubsystemId i = 0; i < s.times.size(); ++i) {
    c += penalties.g(i, period_aoi(calendars[i], s.t, s.times[i].utilized));
  }
  return c;
}

}  // namespace aoisched
