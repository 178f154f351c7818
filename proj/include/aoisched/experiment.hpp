#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <fstream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "aoisched/config.hpp"
#include "aoisched/sim.hpp"

namespace aoisched {

// Mean and half-width of the normal-approximation 95% confidence interval.
struct Estimate {
  double mean = 0.0;
  double ci_half = 0.0;
  std::size_t n = 0;
};

inline Estimate mean_ci(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("a confidence interval needs at least two runs");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return {mean, 1.96 * stderr_, values.size()};
}

// Across-repetition summary of one (policy, horizon) cell.
struct RunSummary {
  std::vector<Estimate> mse;  // per sub-system
  std::vector<Estimate> aoi;
  Estimate network_mse;
  Estimate network_aoi;
  Estimate nodes;
  std::vector<double> tx_mean;
  std::vector<double> success_mean;
  std::size_t runs = 0;
  std::size_t diverged = 0;
};

// Summarizes repetitions; diverged runs are counted but left out of the means.
inline RunSummary aggregate(std::span<const MetricsAccumulator> runs) {
  std::vector<const MetricsAccumulator*> ok;
  for (const auto& r : runs) {
    if (!r.diverged) ok.push_back(&r);
  }
  if (ok.size() < 2) throw std::invalid_argument("a confidence interval needs at least two completed runs");
  const std::size_t n = ok.front()->subsystems.size();
  RunSummary s;
  s.runs = runs.size();
  s.diverged = runs.size() - ok.size();
  std::vector<double> v(ok.size());
  auto collect = [&](auto&& f) {
    for (std::size_t r = 0; r < ok.size(); ++r) v[r] = f(*ok[r]);
    return mean_ci(v);
  };
  for (std::size_t i = 0; i < n; ++i) {
    s.mse.push_back(collect([i](const MetricsAccumulator& m) { return m.mse(i); }));
    s.aoi.push_back(collect([i](const MetricsAccumulator& m) { return m.aoi_mean(i); }));
    s.tx_mean.push_back(collect([i](const MetricsAccumulator& m) {
                          return static_cast<double>(m.subsystems[i].transmissions);
                        }).mean);
    s.success_mean.push_back(
        collect([i](const MetricsAccumulator& m) { return static_cast<double>(m.subsystems[i].successes); }).mean);
  }
  s.network_mse = collect([](const MetricsAccumulator& m) { return m.network_mse(); });
  s.network_aoi = collect([](const MetricsAccumulator& m) { return m.network_aoi(); });
  s.nodes = collect([](const MetricsAccumulator& m) { return m.nodes_mean(); });
  return s;
}

// One simulated (policy, horizon) combination.
struct SweepCell {
  PolicyKind policy;
  int horizon;  // 0 for policies that do not look ahead

  std::string id(const std::string& experiment) const {
    return experiment + "_" + std::string(policy_name(policy)) + "_H" + std::to_string(horizon);
  }
};

// Cells of a sweep: the finite-horizon policy once per horizon, every other
// policy once (greedy is reported at horizon 1).
inline std::vector<SweepCell> sweep_cells(const ExperimentSpec& spec) {
  std::vector<SweepCell> cells;
  for (PolicyKind p : spec.policies) {
    if (p == PolicyKind::fh) {
      for (int h : spec.horizons) cells.push_back({p, h});
    } else {
      cells.push_back({p, p == PolicyKind::greedy ? 1 : 0});
    }
  }
  return cells;
}

struct ResultRow {
  std::string experiment;
  PolicyKind policy;
  int horizon;
  int repetition;
  int subsystem;  // 1-based; 0 is the network row
  double mse;
  double aoi_mean;
  long tx_count;
  long success_count;
  double nodes_mean;
  bool diverged;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<std::vector<MetricsAccumulator>> runs;  // [cell][repetition]
  std::vector<ResultRow> rows;                        // cell-major, then repetition, then sub-system
};

inline std::vector<ResultRow> result_rows(const std::string& experiment, const SweepCell& cell, int repetition,
                                          const MetricsAccumulator& m) {
  std::vector<ResultRow> rows;
  const int n = static_cast<int>(m.subsystems.size());
  for (int i = 0; i < n; ++i) {
    const auto& s = m.subsystems[static_cast<std::size_t>(i)];
    rows.push_back({experiment, cell.policy, cell.horizon, repetition, i + 1, m.mse(static_cast<std::size_t>(i)),
                    m.aoi_mean(static_cast<std::size_t>(i)), s.transmissions, s.successes, m.nodes_mean(),
                    m.diverged});
  }
  rows.push_back({experiment, cell.policy, cell.horizon, repetition, 0, m.network_mse(), m.network_aoi(),
                  m.transmissions(), m.successes(), m.nodes_mean(), m.diverged});
  return rows;
}

// Runs every (cell, repetition) pair. Repetition r uses the same seeds in every
// cell, so cells are compared on common random numbers. Work is spread over
// `threads` workers; results are stored by index, so the output does not
// depend on completion order.
inline SweepResult run_sweep(const ExperimentSpec& spec, int threads = 0) {
  if (threads <= 0) threads = spec.threads;
  SweepResult out;
  out.cells = sweep_cells(spec);
  const auto reps = static_cast<std::size_t>(spec.base.repetitions);
  out.runs.assign(out.cells.size(), std::vector<MetricsAccumulator>(reps));

  const std::size_t jobs = out.cells.size() * reps;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t c = j / reps;
      const std::size_t r = j % reps;
      SimConfig cfg = spec.base;
      cfg.policy = out.cells[c].policy;
      cfg.horizon = std::max(1, out.cells[c].horizon);
      try {
        out.runs[c][r] = run(cfg, r);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(jobs, 1));
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t c = 0; c < out.cells.size(); ++c) {
    for (std::size_t r = 0; r < reps; ++r) {
      auto rows = result_rows(out.cells[c].id(spec.name), out.cells[c], static_cast<int>(r), out.runs[c][r]);
      out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    }
  }
  return out;
}

// ---- CSV output -----------------------------------------------------------

// Shortest round-trip representation; identical doubles give identical text.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline constexpr const char* kRunsHeader =
    "experiment,policy,H,repetition,subsystem,mse,aoi_mean,tx_count,success_count,nodes_mean,diverged";
inline constexpr const char* kSummaryHeader =
    "experiment,policy,H,subsystem,runs,diverged,mse_mean,mse_ci,aoi_mean,aoi_ci,tx_mean,success_mean,nodes_mean,"
    "nodes_ci";
inline constexpr const char* kPlotHeader = "policy,H,series,mean,ci_half";

inline std::string subsystem_label(int id) { return id == 0 ? "network" : std::to_string(id); }

inline void write_row(std::ostream& os, const ResultRow& r) {
  os << r.experiment << ',' << policy_name(r.policy) << ',' << r.horizon << ',' << r.repetition << ','
     << subsystem_label(r.subsystem) << ',' << format_double(r.mse) << ',' << format_double(r.aoi_mean) << ','
     << r.tx_count << ',' << r.success_count << ',' << format_double(r.nodes_mean) << ','
     << (r.diverged ? "true" : "false") << '\n';
}

struct CellSummary {
  SweepCell cell;
  std::string experiment;
  std::optional<RunSummary> summary;  // empty if fewer than two runs completed
  std::size_t runs = 0;
  std::size_t diverged = 0;
};

inline std::vector<CellSummary> summarize(const ExperimentSpec& spec, const SweepResult& result) {
  std::vector<CellSummary> out;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    CellSummary cs{result.cells[c], result.cells[c].id(spec.name), std::nullopt, result.runs[c].size(), 0};
    for (const auto& r : result.runs[c]) cs.diverged += r.diverged ? 1 : 0;
    try {
      cs.summary = aggregate(result.runs[c]);
    } catch (const std::invalid_argument&) {
    }
    out.push_back(std::move(cs));
  }
  return out;
}

inline void write_summary(std::ostream& os, std::span<const CellSummary> cells) {
  os << kSummaryHeader << '\n';
  for (const auto& cs : cells) {
    const std::string head = cs.experiment + "," + std::string(policy_name(cs.cell.policy)) + "," +
                             std::to_string(cs.cell.horizon) + ",";
    if (!cs.summary) {
      os << head << "network," << cs.runs << ',' << cs.diverged << ",,,,,,,,\n";
      continue;
    }
    const RunSummary& s = *cs.summary;
    double tx_total = 0.0, success_total = 0.0;
    for (std::size_t i = 0; i < s.mse.size(); ++i) {
      os << head << (i + 1) << ',' << s.runs << ',' << s.diverged << ',' << format_double(s.mse[i].mean) << ','
         << format_double(s.mse[i].ci_half) << ',' << format_double(s.aoi[i].mean) << ','
         << format_double(s.aoi[i].ci_half) << ',' << format_double(s.tx_mean[i]) << ','
         << format_double(s.success_mean[i]) << ',' << format_double(s.nodes.mean) << ','
         << format_double(s.nodes.ci_half) << '\n';
      tx_total += s.tx_mean[i];
      success_total += s.success_mean[i];
    }
    os << head << "network," << s.runs << ',' << s.diverged << ',' << format_double(s.network_mse.mean) << ','
       << format_double(s.network_mse.ci_half) << ',' << format_double(s.network_aoi.mean) << ','
       << format_double(s.network_aoi.ci_half) << ',' << format_double(tx_total) << ','
       << format_double(success_total) << ',' << format_double(s.nodes.mean) << ',' << format_double(s.nodes.ci_half)
       << '\n';
  }
}

// Long-format plot data: one series per sub-system (MSE_i or AoI_i) plus the
// network average (MSE_avg or AoI_avg).
inline void write_plotdata(std::ostream& mse_os, std::ostream& aoi_os, std::span<const CellSummary> cells) {
  mse_os << kPlotHeader << '\n';
  aoi_os << kPlotHeader << '\n';
  for (const auto& cs : cells) {
    if (!cs.summary) continue;
    const RunSummary& s = *cs.summary;
    const std::string head = std::string(policy_name(cs.cell.policy)) + "," + std::to_string(cs.cell.horizon) + ",";
    auto line = [&](std::ostream& os, const std::string& series, const Estimate& e) {
      os << head << series << ',' << format_double(e.mean) << ',' << format_double(e.ci_half) << '\n';
    };
    for (std::size_t i = 0; i < s.mse.size(); ++i) line(mse_os, "MSE_" + std::to_string(i + 1), s.mse[i]);
    line(mse_os, "MSE_avg", s.network_mse);
    for (std::size_t i = 0; i < s.aoi.size(); ++i) line(aoi_os, "AoI_" + std::to_string(i + 1), s.aoi[i]);
    line(aoi_os, "AoI_avg", s.network_aoi);
  }
}

// Writes <out>/<experiment id>.csv per cell, summary.csv, plot_mse.csv and
// plot_aoi.csv. Returns the paths written.
inline std::vector<std::filesystem::path> write_outputs(const ExperimentSpec& spec, const SweepResult& result,
                                                        const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto open = [&](const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    written.push_back(p);
    return os;
  };

  const std::size_t per_cell = result.cells.empty() ? 0 : result.rows.size() / result.cells.size();
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    auto os = open(out_dir / (result.cells[c].id(spec.name) + ".csv"));
    os << kRunsHeader << '\n';
    for (std::size_t k = c * per_cell; k < (c + 1) * per_cell; ++k) write_row(os, result.rows[k]);
  }
  const auto cells = summarize(spec, result);
  {
    auto os = open(out_dir / "summary.csv");
    write_summary(os, cells);
  }
  {
    auto mse = open(out_dir / "plot_mse.csv");
    auto aoi = open(out_dir / "plot_aoi.csv");
    write_plotdata(mse, aoi, cells);
  }
  return written;
}

}  // namespace aoisched
