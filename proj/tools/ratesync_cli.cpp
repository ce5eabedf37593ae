// ratesync command line: QoE model fitting, single-instance allocation,
// budget sweeps and multi-segment session simulation. All outputs are CSV
// and deterministic for a fixed config and seed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ratesync/allocator.hpp"
#include "ratesync/config.hpp"
#include "ratesync/csv.hpp"
#include "ratesync/oracle.hpp"
#include "ratesync/profiles.hpp"
#include "ratesync/qoe.hpp"
#include "ratesync/sim.hpp"

namespace fs = std::filesystem;
using namespace ratesync;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitError = 2;

std::uint64_t fnv1a(std::string_view text, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (char ch : text) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex16(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buffer);
}

std::ofstream open_output(const std::string& out_dir, const std::string& name) {
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::int64_t> seed;
  std::optional<std::vector<double>> ladder;
  std::optional<int> trials;
  std::optional<std::vector<double>> budgets;
};

// Applies CLI overrides on top of the config file and extends the digest so
// the manifest reflects the fully resolved run.
ResolvedScenario load_scenario(const CommonOptions& opt) {
  const ConfigFile file = ConfigFile::parse_file(opt.config_path);
  ResolvedScenario resolved = resolve_scenario(file);
  std::uint64_t digest = fnv1a(resolved.digest);
  if (opt.seed) {
    resolved.scenario.seed = static_cast<std::uint64_t>(*opt.seed);
    digest = fnv1a("cli.seed=" + std::to_string(*opt.seed), digest);
  }
  if (opt.ladder) {
    resolved.scenario.ladder = *opt.ladder;
    std::string text = "cli.ladder=";
    for (double v : *opt.ladder) text += fmt_num(v) + ",";
    digest = fnv1a(text, digest);
  }
  if (opt.trials) {
    resolved.trials = *opt.trials;
    digest = fnv1a("cli.trials=" + std::to_string(*opt.trials), digest);
  }
  if (opt.budgets) {
    resolved.budgets = *opt.budgets;
    std::string text = "cli.budgets=";
    for (double v : *opt.budgets) text += fmt_num(v) + ",";
    digest = fnv1a(text, digest);
  }
  resolved.digest = hex16(digest);
  return resolved;
}

std::vector<UserState> build_users(const ResolvedScenario& resolved) {
  const std::size_t n = static_cast<std::size_t>(resolved.scenario.num_users);
  const std::vector<double> requests = resolved.scenario.resolved_requests();
  std::vector<UserState> users(n);
  RandomStream rng = RandomStream::split(resolved.scenario.seed, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!resolved.fixed_gains.empty()) {
      const double h =
          resolved.fixed_gains.size() == 1 ? resolved.fixed_gains[0] : resolved.fixed_gains[i];
      if (!(h > 0.0)) {
        throw ConfigError("users.gain_to_noise: dead channel (h must be > 0)");
      }
      users[i].gain_to_noise = h;
    } else {
      do {
        users[i].gain_to_noise = sample_gain(rng, resolved.scenario.session.channel);
      } while (users[i].gain_to_noise == 0.0);
    }
    users[i].requested_bits = requests[i];
    if (!resolved.prior_delays.empty()) {
      users[i].prior_residual_delay =
          resolved.prior_delays.size() == 1 ? resolved.prior_delays[0] : resolved.prior_delays[i];
    }
  }
  return users;
}

int cmd_fit(const std::string& dataset_path, const std::string& normalization,
            const std::string& out_dir) {
  MosDataset raw = load_mos_csv(dataset_path);
  const Normalization norm =
      normalization == "b" ? Normalization::kFittingWindow : Normalization::kMaxRate;
  const MosDataset dataset = normalize(raw, norm);
  const FitResult result = fit(dataset);

  std::ifstream in(dataset_path, std::ios::binary);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  RunManifest manifest;
  manifest.command = "fit";
  manifest.config_digest = hex16(fnv1a("norm=" + normalization, fnv1a(bytes.str())));
  std::cout << manifest.line() << "\n";
  std::cout << "video=" << dataset.video_name << " alpha1=" << fmt_num(result.model.alpha1)
            << " alpha2=" << fmt_num(result.model.alpha2)
            << " alpha3=" << fmt_num(result.model.alpha3)
            << " reference_rate=" << fmt_num(dataset.reference_rate)
            << " mse=" << fmt_num(result.mse) << " normalization=" << to_string(norm) << "\n";

  auto out = open_output(out_dir, "model.csv");
  CsvWriter csv(out);
  csv.header("video,alpha1,alpha2,alpha3,reference_rate,mse,normalization");
  csv.field(dataset.video_name)
      .field(result.model.alpha1)
      .field(result.model.alpha2)
      .field(result.model.alpha3)
      .field(dataset.reference_rate)
      .field(result.mse)
      .field(to_string(norm));
  csv.end_row();
  return kExitOk;
}

int cmd_allocate(const CommonOptions& opt) {
  const ResolvedScenario resolved = load_scenario(opt);
  if (!resolved.has_budget) throw ConfigError("missing session.per_user_budget");
  const SessionConfig& cfg = resolved.scenario.session;
  const std::vector<UserState> users = build_users(resolved);

  Allocation alloc = detail::run_scheme(resolved.scenario.scheme, cfg, users);
  if (!resolved.scenario.ladder.empty()) {
    alloc = discretize(cfg, users, alloc, resolved.scenario.ladder);
  }
  const FeasibilityReport report = feasibility_report(cfg, users, alloc);

  RunManifest manifest{"allocate", resolved.digest, resolved.scenario.seed};
  std::cout << manifest.line() << "\n";
  std::cout << "case=" << to_string(alloc.case_label) << " converged=" << alloc.converged
            << " iterations=" << alloc.iterations
            << " total_qoe=" << fmt_num(total_qoe(cfg, users, alloc))
            << " c1_slack=" << fmt_num(report.c1_slack) << " c2_gap=" << fmt_num(report.c2_gap)
            << " c3_ok=" << report.c3_ok << "\n";

  auto out = open_output(opt.out_dir, "allocation.csv");
  CsvWriter csv(out);
  csv.header("user,h,rate_bps,requested_bits,allocated_bits,play_delay_s,qoe");
  for (std::size_t i = 0; i < users.size(); ++i) {
    csv.field(static_cast<int>(i))
        .field(users[i].gain_to_noise)
        .field(transmission_rate(users[i].gain_to_noise, cfg.channel))
        .field(users[i].requested_bits)
        .field(alloc.sizes_bits[i])
        .field(report.per_user_delays[i])
        .field(evaluate(cfg.qoe, alloc.sizes_bits[i], users[i].requested_bits));
    csv.end_row();
  }
  std::ostringstream summary;
  summary << "case=" << to_string(alloc.case_label) << " converged=" << alloc.converged;
  csv.comment(summary.str());
  return alloc.converged ? kExitOk : kExitNotConverged;
}

int cmd_sweep(const CommonOptions& opt) {
  const ResolvedScenario resolved = load_scenario(opt);
  if (resolved.budgets.empty()) {
    throw ConfigError("sweep needs budgets (run.budgets or --budgets)");
  }
  ScenarioConfig scenario = resolved.scenario;
  if (!resolved.has_budget) scenario.session.per_user_budget = resolved.budgets.front();
  const std::vector<SweepRow> rows = sweep_budget(scenario, resolved.budgets, resolved.trials);

  RunManifest manifest{"sweep", resolved.digest, scenario.seed};
  std::cout << manifest.line() << "\n";
  std::cout << "rows=" << rows.size() << " budgets=" << resolved.budgets.size()
            << " trials=" << resolved.trials << "\n";

  auto out = open_output(opt.out_dir, "sweep.csv");
  CsvWriter csv(out);
  csv.header("scheme,budget,mean_qoe,se_qoe,mean_gap_s,se_gap_s");
  for (const SweepRow& row : rows) {
    csv.field(row.scheme)
        .field(row.budget)
        .field(row.mean_qoe)
        .field(row.se_qoe)
        .field(row.mean_gap_s)
        .field(row.se_gap_s);
    csv.end_row();
  }
  return kExitOk;
}

int cmd_simulate(const CommonOptions& opt) {
  const ResolvedScenario resolved = load_scenario(opt);
  if (!resolved.has_budget) throw ConfigError("missing session.per_user_budget");
  const std::vector<SegmentTrace> traces = run_session(resolved.scenario);

  RunManifest manifest{"simulate", resolved.digest, resolved.scenario.seed};
  std::cout << manifest.line() << "\n";
  bool all_converged = true;
  double final_gap = 0.0;
  for (const SegmentTrace& t : traces) {
    all_converged = all_converged && t.converged;
    final_gap = t.max_accumulated_gap;
  }
  std::cout << "segments=" << traces.size() << " scheme=" << to_string(resolved.scenario.scheme)
            << " converged=" << all_converged << " final_gap_s=" << fmt_num(final_gap) << "\n";

  auto out = open_output(opt.out_dir, "traces.csv");
  CsvWriter csv(out);
  csv.header("segment,scheme,total_qoe,max_gap_s,cost,case");
  for (const SegmentTrace& t : traces) {
    csv.field(t.segment_index)
        .field(to_string(resolved.scenario.scheme))
        .field(t.total_qoe)
        .field(t.max_accumulated_gap)
        .field(t.total_cost)
        .field(to_string(t.case_label));
    csv.end_row();
  }
  return all_converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QoE-optimal playback-rate allocation for synchronized multi-user streaming"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string dataset_path;
  std::string normalization = "a";

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a QoE model to a MOS dataset");
  fit_cmd->add_option("dataset", dataset_path, "MOS CSV (rate_kbps,mos)")->required();
  fit_cmd->add_option("--normalization", normalization, "a: all rows / max rate, b: fitting window")
      ->check(CLI::IsMember({"a", "b"}));
  fit_cmd->add_option("--out", common.out_dir, "output directory");

  const auto add_common = [&](CLI::App* cmd, bool with_trials_budgets) {
    cmd->add_option("--config", common.config_path, "scenario config file")->required();
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_option("--seed", common.seed, "override the run seed");
    cmd->add_option("--ladder", common.ladder, "comma list of ladder fractions")->delimiter(',');
    if (with_trials_budgets) {
      cmd->add_option("--trials", common.trials, "Monte-Carlo trials");
      cmd->add_option("--budgets", common.budgets, "comma list of per-user budgets")
          ->delimiter(',');
    }
  };
  CLI::App* allocate_cmd = app.add_subcommand("allocate", "solve one allocation instance");
  add_common(allocate_cmd, false);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "budget sweep across the three schemes");
  add_common(sweep_cmd, true);
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "multi-segment session simulation");
  add_common(simulate_cmd, false);

  try {
    app.parse(argc, argv);
    if (fit_cmd->parsed()) return cmd_fit(dataset_path, normalization, common.out_dir);
    if (allocate_cmd->parsed()) return cmd_allocate(common);
    if (sweep_cmd->parsed()) return cmd_sweep(common);
    if (simulate_cmd->parsed()) return cmd_simulate(common);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "ratesync: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
