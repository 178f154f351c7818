#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aoisched/penalty.hpp"
#include "aoisched/sim.hpp"

namespace aoisched {

// Invalid or unreadable configuration. The message names the offending field
// or the line and column of a syntax error.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
  std::string name = "experiment";
  SimConfig base;
  std::vector<int> horizons{1};
  std::vector<PolicyKind> policies{PolicyKind::fh};
  std::string output = "results";
  int threads = 1;
};

namespace detail {

using json = nlohmann::json;

inline std::string valid_policy_list() {
  std::string s;
  for (auto n : kPolicyNames) {
    if (!s.empty()) s += ", ";
    s += n;
  }
  return s;
}

// Accepts a number (1x1 matrix) or a row-major array of rows.
inline Matrix parse_matrix(const json& j, const std::string& field) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(field + ": expected a number or a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.empty()) throw ConfigError(field + ": every row must be a non-empty array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(field + ": rows have different lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ConfigError(field + ": entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(prefix + key + ": wrong type");
  }
}

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

// Builds and validates an experiment from parsed JSON. Missing keys take the
// defaults of the reference scenario, except `subsystems`, which defaults to
// the three scalar plants A = 1.0, 1.25, 1.5.
inline ExperimentSpec spec_from_json(const nlohmann::json& root) {
  using detail::get_or;
  using detail::json;
  if (!root.is_object()) throw ConfigError("top level: expected an object");

  ExperimentSpec spec;
  spec.name = get_or<std::string>(root, "name", "reference", "");
  spec.output = get_or<std::string>(root, "output", "results", "");
  spec.threads = get_or<int>(root, "threads", 1, "");
  if (spec.threads < 1) throw ConfigError("threads: must be >= 1");

  SimConfig& cfg = spec.base;
  cfg.seed = get_or<std::uint64_t>(root, "seed", 1, "");
  cfg.slots = get_or<Slot>(root, "slots", 20000, "");
  cfg.repetitions = get_or<int>(root, "repetitions", 200, "");
  if (cfg.slots < 1) throw ConfigError("slots: must be >= 1");
  if (cfg.repetitions < 1) throw ConfigError("repetitions: must be >= 1");

  const json channel = root.value("channel", json::object());
  if (!channel.is_object()) throw ConfigError("channel: expected an object");
  cfg.channel.mean = get_or<double>(channel, "loss_mean", 0.3, "channel.");
  cfg.channel.stddev = get_or<double>(channel, "loss_stddev", 0.2, "channel.");
  cfg.channel.coherence = get_or<Slot>(channel, "coherence", 30, "channel.");
  if (cfg.channel.stddev < 0.0) throw ConfigError("channel.loss_stddev: must be >= 0");
  if (cfg.channel.coherence < 1) throw ConfigError("channel.coherence: must be >= 1");

  const json sweep = root.value("sweep", json::object());
  if (!sweep.is_object()) throw ConfigError("sweep: expected an object");
  spec.horizons = get_or<std::vector<int>>(sweep, "horizons", {1}, "sweep.");
  if (spec.horizons.empty()) throw ConfigError("sweep.horizons: must not be empty");
  for (int h : spec.horizons) {
    if (h < 1) throw ConfigError("sweep.horizons: every horizon must be >= 1");
  }
  const auto names = get_or<std::vector<std::string>>(sweep, "policies", {"fh"}, "sweep.");
  if (names.empty()) throw ConfigError("sweep.policies: must not be empty");
  spec.policies.clear();
  for (const auto& n : names) {
    auto k = parse_policy(n);
    if (!k) throw ConfigError("sweep.policies: unknown policy '" + n + "' (valid: " + detail::valid_policy_list() + ")");
    spec.policies.push_back(*k);
  }

  json subs = root.value("subsystems", json());
  if (subs.is_null()) {
    subs = json::array();
    for (double a : {1.0, 1.25, 1.5}) subs.push_back({{"A", a}});
  }
  if (!subs.is_array() || subs.empty()) throw ConfigError("subsystems: expected a non-empty array");
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string prefix = "subsystems[" + std::to_string(i) + "].";
    const json& s = subs[i];
    if (!s.is_object()) throw ConfigError(prefix.substr(0, prefix.size() - 1) + ": expected an object");
    if (!s.contains("A")) throw ConfigError(prefix + "A: required");
    Matrix A = detail::parse_matrix(s["A"], prefix + "A");
    const Eigen::Index n = A.rows();
    auto mat = [&](const char* key, Matrix fallback) {
      return s.contains(key) ? detail::parse_matrix(s[key], prefix + key) : fallback;
    };
    Matrix B = mat("B", Matrix::Identity(n, 1));
    Matrix sigma = mat("Sigma", Matrix::Identity(n, n));
    Matrix Q = mat("Q", Matrix::Identity(n, n));
    Matrix R = mat("R", Matrix::Zero(B.cols(), B.cols()));
    const Slot period = get_or<Slot>(s, "period", 3, prefix);
    if (period < 1) throw ConfigError(prefix + "period: must be >= 1");
    try {
      cfg.subsystems.push_back({PlantModel(A, B, sigma, Q, R), period});
    } catch (const SynthesisError& e) {
      throw ConfigError(prefix.substr(0, prefix.size() - 1) + ": controller synthesis failed: " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(prefix.substr(0, prefix.size() - 1) + ": " + e.what());
    }
  }
  return spec;
}

// One-shot scheduling problem: a network state plus what fh_decide needs.
struct DecideRequest {
  TimingState state;
  std::vector<SamplingCalendar> calendars;
  PenaltyTable penalties;
  std::vector<double> loss;
  int horizon = 1;
};

// Reads {"t", "horizon", "loss": [...], "subsystems": [{"period", "offset",
// "generated", "received", "utilized", "A", "Sigma"}]}. Sigma defaults to I.
inline DecideRequest decide_request_from_json(const nlohmann::json& root) {
  using detail::get_or;
  using detail::json;
  if (!root.is_object()) throw ConfigError("top level: expected an object");
  if (!root.contains("t")) throw ConfigError("t: required");
  DecideRequest req;
  req.state.t = get_or<Slot>(root, "t", 0, "");
  req.horizon = get_or<int>(root, "horizon", 1, "");
  if (req.horizon < 1) throw ConfigError("horizon: must be >= 1");
  req.loss = get_or<std::vector<double>>(root, "loss", {}, "");
  const json subs = root.value("subsystems", json::array());
  if (!subs.is_array() || subs.empty()) throw ConfigError("subsystems: expected a non-empty array");
  if (req.loss.size() != subs.size()) throw ConfigError("loss: need one probability per sub-system");
  for (double p : req.loss) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("loss: probabilities must lie in [0, 1]");
  }
  std::vector<AgePenalty> penalties;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string prefix = "subsystems[" + std::to_string(i) + "].";
    const json& s = subs[i];
    if (!s.is_object()) throw ConfigError(prefix.substr(0, prefix.size() - 1) + ": expected an object");
    for (const char* key : {"period", "offset", "generated", "received", "utilized", "A"}) {
      if (!s.contains(key)) throw ConfigError(prefix + key + ": required");
    }
    const Slot period = get_or<Slot>(s, "period", 1, prefix);
    const Slot offset = get_or<Slot>(s, "offset", 0, prefix);
    if (period < 1) throw ConfigError(prefix + "period: must be >= 1");
    if (offset < 0 || offset >= period) throw ConfigError(prefix + "offset: must lie in [0, period)");
    req.calendars.emplace_back(period, offset);
    req.state.times.push_back({get_or<Slot>(s, "generated", 0, prefix), get_or<Slot>(s, "received", 0, prefix),
                               get_or<Slot>(s, "utilized", 0, prefix)});
    Matrix A = detail::parse_matrix(s["A"], prefix + "A");
    Matrix sigma = s.contains("Sigma") ? detail::parse_matrix(s["Sigma"], prefix + "Sigma")
                                       : Matrix::Identity(A.rows(), A.rows());
    try {
      penalties.emplace_back(std::move(A), std::move(sigma));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(prefix + "A: " + e.what());
    }
  }
  req.penalties = PenaltyTable(std::move(penalties));
  return req;
}

// JSON with comments allowed; syntax errors report line and column.
inline nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte);
    throw ConfigError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ExperimentSpec parse_config(const std::string& text) { return spec_from_json(parse_json(text)); }

inline ExperimentSpec load_config(const std::string& path) { return parse_config(read_text(path)); }

}  // namespace aoisched
