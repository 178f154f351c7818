#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aoisched/aoisched.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

struct Options {
  std::string config;
  std::string state;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<double> loss;
  long max_delta = 20;
  std::string method = "auto";
};

aoisched::ExperimentSpec load(const Options& o, const CLI::App& sub) {
  auto spec = aoisched::load_config(o.config);
  if (sub.count("--seed")) spec.base.seed = o.seed;
  if (sub.count("--threads")) {
    if (o.threads < 1) throw aoisched::ConfigError("--threads: must be >= 1");
    spec.threads = o.threads;
  }
  if (sub.count("--out")) spec.output = o.out;
  return spec;
}

int cmd_run(const Options& o, const CLI::App& sub) {
  const auto spec = load(o, sub);
  const auto result = aoisched::run_sweep(spec);
  for (const auto& p : aoisched::write_outputs(spec, result, spec.output)) std::cout << p.string() << '\n';
  std::size_t diverged = 0;
  for (const auto& cell : result.runs) {
    for (const auto& r : cell) diverged += r.diverged ? 1 : 0;
  }
  if (diverged > 0) std::cerr << "warning: " << diverged << " run(s) diverged\n";
  return kOk;
}

int cmd_validate(const Options& o, const CLI::App& sub) {
  const auto spec = load(o, sub);
  std::cout << "ok: " << spec.name << ", " << spec.base.subsystems.size() << " sub-systems, "
            << aoisched::sweep_cells(spec).size() << " cells x " << spec.base.repetitions << " repetitions x "
            << spec.base.slots << " slots\n";
  return kOk;
}

int cmd_decide(const Options& o) {
  const auto req = aoisched::decide_request_from_json(aoisched::parse_json(aoisched::read_text(o.state)));
  for (std::size_t i = 0; i < req.state.size(); ++i) {
    const auto& p = req.state.times[i];
    if (p.received > p.generated || p.utilized > p.received) {
      throw aoisched::ConfigError("subsystems[" + std::to_string(i) +
                                  "]: timestamps must satisfy utilized <= received <= generated");
    }
  }
  const auto d = aoisched::fh_decide(req.state, req.calendars, req.penalties, req.loss, req.horizon);
  nlohmann::json out;
  if (d.action.is_idle()) {
    out["action"] = "idle";
  } else {
    out["action"] = "transmit";
    out["subsystem"] = d.action.subsystem() + 1;  // 1-based, as in the CSV outputs
  }
  out["predicted_cost"] = d.predicted_cost;
  out["nodes_expanded"] = d.nodes_expanded;
  out["distinct_states"] = d.distinct_states;
  std::cout << out.dump(2) << '\n';
  return kOk;
}

int cmd_hopdist(const Options& o) {
  namespace hd = aoisched::hopdist;
  const hd::HopChain chain(o.loss);
  if (o.max_delta < 0) throw aoisched::ConfigError("--max-delta: must be >= 0");
  std::cout << "delta,pmf\n";
  for (long d = 0; d <= o.max_delta; ++d) {
    double v = 0.0;
    if (o.method == "oracle") {
      v = hd::pmf_oracle(chain, d);
    } else if (o.method == "closed") {
      v = hd::pmf_closed(chain, d);
    } else {
      v = hd::pmf(chain, d);
    }
    std::cout << d << ',' << aoisched::format_double(v) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-of-information scheduling simulator for networked control loops"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the master seed");
    sub->add_option("--out", o.out, "override the output directory");
    sub->add_option("--threads", o.threads, "override the worker count");
  };
  auto* run = app.add_subcommand("run", "run a sweep and write CSV results");
  add_common(run);
  auto* validate = app.add_subcommand("validate", "check a config file");
  add_common(validate);
  auto* decide = app.add_subcommand("decide", "one finite-horizon decision for a state file");
  decide->add_option("state", o.state, "state file (JSON)")->required()->check(CLI::ExistingFile);
  auto* hop = app.add_subcommand("hopdist", "age PMF over a chain of lossy hops");
  hop->add_option("--loss", o.loss, "per-hop loss probabilities, comma separated")->required()->delimiter(',');
  hop->add_option("--max-delta", o.max_delta, "largest age to print");
  hop->add_option("--method", o.method, "closed, oracle, or auto")
      ->check(CLI::IsMember({"auto", "closed", "oracle"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return cmd_run(o, *run);
    if (*validate) return cmd_validate(o, *validate);
    if (*decide) return cmd_decide(o);
    if (*hop) return cmd_hopdist(o);
  } catch (const aoisched::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kRuntime;
}
