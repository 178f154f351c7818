#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace aoisched::hopdist {

// Age accumulated over a chain of lossy hops. Hop j retransmits until success,
// adding a Geometric(1 - p_j) number of failed attempts to the age.
class HopChain {
 public:
  explicit HopChain(std::vector<double> loss) : loss_(std::move(loss)) {
    if (loss_.empty()) throw std::invalid_argument("a hop chain needs at least one hop");
    for (double p : loss_) {
      if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("hop loss probabilities must lie in [0, 1)");
    }
  }

  std::size_t hops() const noexcept { return loss_.size(); }
  double loss(std::size_t j) const { return loss_.at(j); }
  const std::vector<double>& losses() const noexcept { return loss_; }

 private:
  std::vector<double> loss_;
};

class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Minimum pairwise separation of loss probabilities for the closed forms.
inline constexpr double kSeparationGuard = 1e-6;

inline bool closed_form_applies(const HopChain& chain) {
  const auto& p = chain.losses();
  if (p.size() > 3) return false;
  for (std::size_t a = 0; a < p.size(); ++a) {
    for (std::size_t b = a + 1; b < p.size(); ++b) {
      if (std::abs(p[a] - p[b]) < kSeparationGuard) return false;
    }
  }
  return true;
}

// Closed-form PMF for chains of one to three hops.
inline double pmf_closed(const HopChain& chain, long delta) {
  if (delta < 0) return 0.0;
  const auto& p = chain.losses();
  const double d1 = static_cast<double>(delta) + 1.0;
  if (p.size() <= 3 && !closed_form_applies(chain)) {
    throw SingularityError("loss probabilities too close for the closed form; use pmf_oracle");
  }
  switch (p.size()) {
    case 1:
      return (1.0 - p[0]) * std::pow(p[0], static_cast<double>(delta));
    case 2:
      return (1.0 - p[0]) * (1.0 - p[1]) * (std::pow(p[1], d1) - std::pow(p[0], d1)) / (p[1] - p[0]);
    case 3: {
      const double scale = (1.0 - p[0]) * (1.0 - p[1]) * (1.0 - p[2]) / (p[1] - p[0]);
      double sum = 0.0;
      for (std::size_t j = 0; j < 2; ++j) {
        const double sign = (j == 0) ? -1.0 : 1.0;  // (-1)^j for j = 1, 2
        sum += sign * p[j] * (std::pow(p[2], d1) - std::pow(p[j], d1)) / (p[2] - p[j]);
      }
      return scale * sum;
    }
    default:
      throw std::invalid_argument("closed form is available for 1 to 3 hops only; use pmf_oracle");
  }
}

// PMF of the summed age by explicit convolution of the per-hop geometric PMFs,
// truncated at delta. Valid for any hop count and for repeated probabilities.
inline double pmf_oracle(const HopChain& chain, long delta) {
  if (delta < 0) return 0.0;
  const auto len = static_cast<std::size_t>(delta) + 1;
  auto geometric = [len](double p) {
    std::vector<double> g(len);
    double pw = 1.0;
    for (std::size_t d = 0; d < len; ++d, pw *= p) g[d] = (1.0 - p) * pw;
    return g;
  };
  std::vector<double> acc = geometric(chain.loss(0));
  for (std::size_t j = 1; j < chain.hops(); ++j) {
    const auto g = geometric(chain.loss(j));
    std::vector<double> next(len, 0.0);
    for (std::size_t d = 0; d < len; ++d) {
      for (std::size_t e = 0; e <= d; ++e) next[d] += acc[e] * g[d - e];
    }
    acc = std::move(next);
  }
  return acc.back();
}

// Closed form where it is defined and well conditioned, convolution otherwise.
inline double pmf(const HopChain& chain, long delta) {
  return closed_form_applies(chain) ? pmf_closed(chain, delta) : pmf_oracle(chain, delta);
}

// Mean age, summing delta * pmf(delta) until the remaining probability mass,
// weighted by a bound on its conditional mean, drops below tail_tol.
//
// The PMF is advanced one delta at a time with the geometric recurrence
// f_j(d) = (1 - p_j) f_{j-1}(d) + p_j f_j(d - 1).
inline double mean_age(const HopChain& chain, double tail_tol = 1e-12) {
  if (!(tail_tol > 0.0)) throw std::invalid_argument("tail tolerance must be positive");
  const std::size_t n = chain.hops();
  double worst = 0.0;
  for (double p : chain.losses()) worst = std::max(worst, p);
  const double excess_bound = static_cast<double>(n) / (1.0 - worst);

  std::vector<double> prev(n, 0.0);  // f_j(d - 1)
  std::vector<double> cur(n, 0.0);
  double mass = 0.0;
  double mean = 0.0;
  for (long d = 0;; ++d) {
    double below = (d == 0) ? 1.0 : 0.0;  // f_0: point mass at zero
    for (std::size_t j = 0; j < n; ++j) {
      cur[j] = (1.0 - chain.loss(j)) * below + chain.loss(j) * prev[j];
      below = cur[j];
    }
    const double f = cur[n - 1];
    mass += f;
    mean += static_cast<double>(d) * f;
    std::swap(prev, cur);
    const double rest = std::max(0.0, 1.0 - mass);
    if (rest * (static_cast<double>(d) + 1.0 + excess_bound) < tail_tol) break;
    if (d > 100'000'000) throw std::runtime_error("mean_age did not converge");
  }
  return mean;
}

}  // namespace aoisched::hopdist
