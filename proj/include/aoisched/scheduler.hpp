#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aoisched/penalty.hpp"
#include "aoisched/rng.hpp"
#include "aoisched/timing.hpp"

namespace aoisched {

struct SchedulerDecision {
  Action action;
  double predicted_cost = 0.0;
  // Nodes of the decision tree rooted at the current state, where only
  // identical children of the same parent are merged (the idle child absorbs
  // every failed transmission).
  std::uint64_t nodes_expanded = 0;
  // Distinct (level, state) pairs actually evaluated.
  std::uint64_t distinct_states = 0;
};

// Worst-case node count of an H-level tree over N sub-systems when every
// sub-system always holds a fresh packet: ((N+1)^(H+1) - 1) / N.
inline double worst_case_nodes(std::size_t n, int horizon) {
  return (std::pow(static_cast<double>(n + 1), horizon + 1) - 1.0) / static_cast<double>(n);
}

struct Transition {
  double probability;
  TimingState next;
};

// Successor states of `state` under `action` with loss probabilities `loss`.
// Transmitting sub-system i succeeds with 1 - p_i and fails with p_i; idling
// leads to the failure state with certainty. Zero-probability outcomes are
// omitted.
inline std::vector<Transition> build_children(const TimingState& state, Action action,
                                              std::span<const SamplingCalendar> calendars,
                                              std::span<const double> loss) {
  if (!is_admissible(state, action)) throw std::invalid_argument("build_children: inadmissible action");
  std::vector<Transition> out;
  if (action.is_idle()) {
    out.push_back({1.0, next_state(state, calendars, action, false)});
    return out;
  }
  const double p = loss[action.subsystem()];
  if (p < 1.0) out.push_back({1.0 - p, next_state(state, calendars, action, true)});
  if (p > 0.0) out.push_back({p, next_state(state, calendars, action, false)});
  return out;
}

namespace detail {

struct StateHash {
  std::size_t operator()(const TimingState& s) const noexcept {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(s.t));
    for (const auto& p : s.times) {
      h = splitmix64(h ^ static_cast<std::uint64_t>(p.generated));
      h = splitmix64(h ^ static_cast<std::uint64_t>(p.received));
      h = splitmix64(h ^ static_cast<std::uint64_t>(p.utilized));
    }
    return static_cast<std::size_t>(h);
  }
};

// Strict improvement with a relative tolerance, so that mathematically tied
// actions resolve by ranking rather than by rounding noise.
inline bool strictly_better(double candidate, double incumbent) noexcept {
  if (std::isinf(incumbent)) return candidate < incumbent;
  return candidate < incumbent - 1e-12 * std::max(1.0, std::abs(incumbent));
}

}  // namespace detail

// Actions in tie-break order: idle first, then sub-systems by ascending index.
// The first action reaching the minimum expected cost wins.
inline std::vector<Action> ranked_actions(const TimingState& s) {
  std::vector<Action> out;
  out.push_back(Action::idle());
  for (SubsystemId i = 0; i < s.times.size(); ++i) {
    if (s.times[i].generated > s.times[i].received) out.push_back(Action::transmit(i));
  }
  return out;
}

// Leveled DAG of predicted network states for a finite-horizon decision.
//
// Level 0 holds the current state. Level l + 1 holds every state reachable from
// level l under some admissible action; identical states within a level share
// one node. Costs are assigned by backward induction from the leaves; since
// cost-to-go depends only on (level, state), sharing nodes does not change the
// result. Tree sizes are recovered from the DAG by counting, for each node, the
// subtrees of its distinct children.
class DecisionTree {
 public:
  struct Outcome {
    double probability;
    std::uint32_t child;  // index into the next level
  };

  struct Branch {
    Action action;
    std::array<Outcome, 2> outcomes{};
    std::uint8_t count = 0;
  };

  struct Node {
    TimingState state;
    double stage_cost = 0.0;
    double cost_to_go = 0.0;
    std::optional<Action> best_action;
    std::vector<Branch> branches;
    std::uint64_t subtree_nodes = 1;
  };

  DecisionTree(const TimingState& root, std::span<const SamplingCalendar> calendars, const PenaltyTable& penalties,
               std::span<const double> loss, int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (loss.size() != root.size() || calendars.size() != root.size() || penalties.size() != root.size()) {
      throw std::invalid_argument("DecisionTree: sub-system count mismatch");
    }
    levels_.resize(static_cast<std::size_t>(horizon) + 1);
    levels_[0].push_back(Node{root, state_cost(root, calendars, penalties), 0.0, std::nullopt, {}, 1});

    for (std::size_t l = 0; l < static_cast<std::size_t>(horizon); ++l) {
      auto& cur = levels_[l];
      auto& next = levels_[l + 1];
      std::unordered_map<TimingState, std::uint32_t, detail::StateHash> index;
      index.reserve(cur.size() * (root.size() + 1));
      for (auto& node : cur) {
        for (Action a : ranked_actions(node.state)) {
          Branch br;
          br.action = a;
          for (auto& tr : build_children(node.state, a, calendars, loss)) {
            auto [it, inserted] = index.try_emplace(tr.next, static_cast<std::uint32_t>(next.size()));
            if (inserted) {
              const double c = state_cost(tr.next, calendars, penalties);
              next.push_back(Node{std::move(tr.next), c, 0.0, std::nullopt, {}, 1});
            }
            br.outcomes[br.count++] = {tr.probability, it->second};
          }
          node.branches.push_back(br);
        }
      }
    }
    solve();
  }

  const std::vector<std::vector<Node>>& levels() const noexcept { return levels_; }
  const Node& root() const noexcept { return levels_.front().front(); }
  int horizon() const noexcept { return static_cast<int>(levels_.size()) - 1; }

  std::uint64_t distinct_states() const noexcept {
    std::uint64_t n = 0;
    for (const auto& lvl : levels_) n += lvl.size();
    return n;
  }

  std::uint64_t tree_nodes() const noexcept { return root().subtree_nodes; }

  SchedulerDecision decision() const {
    return {*root().best_action, root().cost_to_go, tree_nodes(), distinct_states()};
  }

 private:
  void solve() {
    for (auto& leaf : levels_.back()) leaf.cost_to_go = leaf.stage_cost;
    std::vector<std::uint32_t> children;
    for (std::size_t l = levels_.size() - 1; l-- > 0;) {
      const auto& next = levels_[l + 1];
      for (auto& node : levels_[l]) {
        double best = std::numeric_limits<double>::infinity();
        std::optional<Action> arg;
        for (const auto& br : node.branches) {
          const double e = expected(br, next);
          if (!arg || detail::strictly_better(e, best)) {
            best = e;
            arg = br.action;
          }
        }
        node.best_action = arg;
        node.cost_to_go = node.stage_cost + best;

        children.clear();
        for (const auto& br : node.branches) {
          for (std::uint8_t j = 0; j < br.count; ++j) children.push_back(br.outcomes[j].child);
        }
        std::sort(children.begin(), children.end());
        children.erase(std::unique(children.begin(), children.end()), children.end());
        node.subtree_nodes = 1;
        for (auto c : children) node.subtree_nodes += next[c].subtree_nodes;
      }
    }
  }

  static double expected(const Branch& br, const std::vector<Node>& next) {
    double e = 0.0;
    for (std::uint8_t j = 0; j < br.count; ++j) e += br.outcomes[j].probability * next[br.outcomes[j].child].cost_to_go;
    return e;
  }

  std::vector<std::vector<Node>> levels_;
};

// Finite-horizon optimal decision for the current slot, treating the observed
// loss probabilities as constant over the horizon.
inline SchedulerDecision fh_decide(const TimingState& s, std::span<const SamplingCalendar> calendars,
                                   const PenaltyTable& penalties, std::span<const double> loss, int horizon) {
  return DecisionTree(s, calendars, penalties, loss, horizon).decision();
}

enum class PolicyKind { fh, greedy, round_robin, random, max_aoi };

inline constexpr std::array<std::string_view, 5> kPolicyNames = {"fh", "greedy", "round_robin", "random", "max_aoi"};

inline std::string_view policy_name(PolicyKind k) { return kPolicyNames[static_cast<std::size_t>(k)]; }

inline std::optional<PolicyKind> parse_policy(std::string_view name) {
  for (std::size_t i = 0; i < kPolicyNames.size(); ++i) {
    if (kPolicyNames[i] == name) return static_cast<PolicyKind>(i);
  }
  return std::nullopt;
}

// Stateful scheduling policy used by the simulator. Baselines keep their own
// cursor (round robin) or random stream (random).
class Policy {
 public:
  Policy(PolicyKind kind, int horizon, std::size_t subsystems, std::uint64_t seed = 0)
      : kind_(kind), horizon_(kind == PolicyKind::greedy ? 1 : horizon), last_served_(subsystems - 1), rng_(seed) {
    if ((kind_ == PolicyKind::fh) && horizon_ < 1) throw std::invalid_argument("fh policy needs horizon >= 1");
  }

  PolicyKind kind() const noexcept { return kind_; }
  int horizon() const noexcept { return horizon_; }

  SchedulerDecision decide(const TimingState& s, std::span<const SamplingCalendar> calendars,
                           const PenaltyTable& penalties, std::span<const double> loss) {
    SchedulerDecision d;
    switch (kind_) {
      case PolicyKind::fh:
      case PolicyKind::greedy:
        d = fh_decide(s, calendars, penalties, loss, horizon_);
        break;
      case PolicyKind::round_robin:
        d.action = round_robin(s);
        break;
      case PolicyKind::random:
        d.action = random_pick(s);
        break;
      case PolicyKind::max_aoi:
        d.action = max_aoi(s, calendars);
        break;
    }
    if (!d.action.is_idle()) last_served_ = d.action.subsystem();
    return d;
  }

 private:
  Action round_robin(const TimingState& s) const {
    const std::size_t n = s.size();
    for (std::size_t step = 1; step <= n; ++step) {
      const Action a = Action::transmit((last_served_ + step) % n);
      if (is_admissible(s, a)) return a;
    }
    return Action::idle();
  }

  Action random_pick(const TimingState& s) {
    auto acts = ranked_actions(s);
    acts.erase(acts.begin());  // idle only when nothing else is admissible
    if (acts.empty()) return Action::idle();
    std::uniform_int_distribution<std::size_t> pick(0, acts.size() - 1);
    return acts[pick(rng_)];
  }

  static Action max_aoi(const TimingState& s, std::span<const SamplingCalendar> calendars) {
    Action best = Action::idle();
    Slot best_age = std::numeric_limits<Slot>::min();
    for (SubsystemId i = 0; i < s.size(); ++i) {
      if (!is_admissible(s, Action::transmit(i))) continue;
      const Slot age = period_aoi(calendars[i], s.t, s.times[i].utilized);
      if (age > best_age) {
        best_age = age;
        best = Action::transmit(i);
      }
    }
    return best;
  }

  PolicyKind kind_;
  int horizon_;
  SubsystemId last_served_;
  Engine rng_;
};

}  // namespace aoisched
