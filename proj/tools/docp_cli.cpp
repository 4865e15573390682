// docp: command-line driver for runs, learning-rate sweeps, the clip-floor
// ablation, optimizer comparison and the verification checks.
//
//   docp run        --config cfg.json --out results/ --seed 3
//   docp sweep      --config cfg.json --out results/
//   docp ablate-mu  --config cfg.json --out results/
//   docp compare    --config cfg.json --out results/ --threads 4
//   docp verify lemma1|rate|hutchinson --out results/
//
// Exit code 0 on success. Failures print one JSON line on stderr:
//   {"error":"<kind>","message":"..."}

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "docp/harness.hpp"

namespace {

using namespace docp;
using namespace docp::harness;
namespace fs = std::filesystem;

struct CommonArgs {
  std::string config;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON config file (defaults used when omitted)");
  cmd->add_option("--out", args.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", args.seed, "base seed (overrides the config)");
  cmd->add_option("--threads", args.threads, "worker threads (else DOCP_THREADS, else 1)");
  cmd->add_option("--format", args.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

/// Without --config, `preset` (when given) replaces the built-in run defaults.
ExperimentConfig load(const CommonArgs& args, std::optional<RunConfig> preset = std::nullopt) {
  ExperimentConfig cfg = args.config.empty() ? parse_config(nlohmann::json::object()) : load_config(args.config);
  if (args.config.empty() && preset) cfg.run = *preset;
  if (args.seed) cfg.run.base_seed = *args.seed;
  if (args.threads) cfg.threads = args.threads;
  return cfg;
}

Format format_of(const CommonArgs& args) { return args.format == "json" ? Format::Json : Format::Csv; }

int fail(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
  return kind == "usage" ? 2 : 1;
}

void print_summary(const std::vector<RunRecord>& records) {
  for (const auto& r : records) {
    std::cout << r.optimizer << " lr=" << format_number(r.lr) << " rep=" << r.replicate
              << (r.diverged ? " DIVERGED" : "") << " final_val=" << format_number(r.final_val)
              << " min_val=" << format_number(r.min_val) << " @" << r.min_val_step << "\n";
  }
}

int cmd_run(const CommonArgs& args) {
  const auto cfg = load(args);
  const auto records = run_experiment(cfg.run, resolve_threads(cfg.threads));
  emit_results(records, format_of(args), args.out);
  print_summary(records);
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  const auto cfg = load(args);
  const auto table = lr_sweep(cfg.sweep, cfg.run, resolve_threads(cfg.threads));
  ensure_dir(args.out);
  std::ostringstream sweep;
  write_sweep_csv(sweep, {table});
  write_file(fs::path(args.out) / "sweep.csv", sweep.str());
  std::vector<RunRecord> all;
  for (const auto& row : table.rows) all.insert(all.end(), row.records.begin(), row.records.end());
  emit_results(all, format_of(args), args.out, "sweep");
  emit_results(table.selected().records, format_of(args), args.out);
  std::cout << "selected lr " << format_number(table.selected_lr) << "\n";
  return 0;
}

int cmd_ablate(const CommonArgs& args) {
  const auto cfg = load(args, mlp_benchmark());
  const auto arms = ablate_mu(cfg.ablation.mu_values, cfg.run, cfg.ablation.lr, resolve_threads(cfg.threads));
  std::vector<RunRecord> all;
  for (const auto& arm : arms) all.insert(all.end(), arm.records.begin(), arm.records.end());
  emit_results(all, format_of(args), args.out);
  print_summary(all);
  return 0;
}

int cmd_compare(const CommonArgs& args) {
  const auto cfg = load(args, mlp_benchmark());
  const auto result = compare(cfg.compare, cfg.sweep, cfg.run, resolve_threads(cfg.threads));
  ensure_dir(args.out);
  std::vector<RunRecord> tuned, swept;
  for (const auto& recs : result.tuned) tuned.insert(tuned.end(), recs.begin(), recs.end());
  for (const auto& t : result.sweeps) {
    for (const auto& row : t.rows) swept.insert(swept.end(), row.records.begin(), row.records.end());
  }
  emit_results(tuned, format_of(args), args.out);
  emit_results(swept, format_of(args), args.out, "sweep");
  std::ostringstream sweep, heat;
  write_sweep_csv(sweep, result.sweeps);
  write_heatmap_csv(heat, heatmap(result.sweeps, cfg.compare.heatmap_step));
  write_file(fs::path(args.out) / "sweep.csv", sweep.str());
  write_file(fs::path(args.out) / "heatmap.csv", heat.str());
  for (const auto& t : result.sweeps) {
    if (!t.has_selection()) {
      std::cout << t.optimizer << " diverged at every coarse lr\n";
      continue;
    }
    const auto& sel = t.selected();
    std::cout << t.optimizer << " tuned lr " << format_number(t.selected_lr) << " min_val "
              << format_number(sel.min_val) << " final_val " << format_number(sel.final_val) << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& which, const CommonArgs& args) {
  const auto cfg = load(args, which == "rate" ? std::optional<RunConfig>(rate_benchmark()) : std::nullopt);
  ensure_dir(args.out);
  nlohmann::json report;
  bool pass = false;
  if (which == "lemma1") {
    Lemma1Options opt;
    opt.trials = cfg.verify.lemma1_trials;
    opt.seed = cfg.run.base_seed;
    const auto rep = verify_lemma1(opt);
    pass = rep.pass;
    report = {{"check", "lemma1"},           {"trials", rep.trials},
              {"compared", rep.compared},    {"excluded", rep.excluded},
              {"max_deviation", rep.max_deviation}, {"max_deviation_first_step", rep.max_deviation_first_step},
              {"tolerance", opt.tolerance},  {"pass", rep.pass}};
  } else if (which == "rate") {
    const auto rep = verify_rate(cfg.run, cfg.verify.rate_T, cfg.verify.rate_seeds, resolve_threads(cfg.threads));
    pass = rep.ratio_last_first <= 0.6;
    report = {{"check", "rate"},
              {"T", rep.T},
              {"min_avg_grad_sq", rep.min_avg_grad_sq},
              {"T_times_min", rep.scaled},
              {"loglog_slope", rep.loglog_slope},
              {"ratio_last_first", rep.ratio_last_first},
              {"threshold", 0.6},
              {"n_seeds", rep.n_seeds},
              {"n_diverged", rep.n_diverged},
              {"pass", pass}};
  } else {
    const auto rep = verify_hutchinson(cfg.verify.hutchinson_probes, cfg.run.base_seed);
    pass = rep.pass;
    report = {{"check", "hutchinson"},
              {"n_probes", rep.n_probes},
              {"true_diag", rep.true_diag},
              {"estimate", rep.estimate},
              {"max_rel_error", rep.max_rel_error},
              {"diagonal_exact_error", rep.diagonal_exact_error},
              {"variance_ratio_4", rep.variance_ratio_4},
              {"variance_ratio_16", rep.variance_ratio_16},
              {"pass", rep.pass}};
  }
  write_file(fs::path(args.out) / ("verify_" + which + ".json"), report.dump(2) + "\n");
  std::cout << report.dump() << "\n" << (pass ? "PASS" : "FAIL") << " " << which << "\n";
  if (!pass) return fail("verification_failed", which + " check did not pass");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diag-OCP optimizer benchmark harness"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* run = app.add_subcommand("run", "run one configuration over n_seeds replicates");
  auto* sweep = app.add_subcommand("sweep", "two-stage learning-rate sweep");
  auto* ablate = app.add_subcommand("ablate-mu", "clip-floor ablation at a fixed lr");
  auto* cmp = app.add_subcommand("compare", "tuned comparison of all optimizers");
  auto* verify = app.add_subcommand("verify", "verification checks");
  verify->require_subcommand(1);
  auto* v_lemma1 = verify->add_subcommand("lemma1", "closed form vs literal recursion");
  auto* v_rate = verify->add_subcommand("rate", "min gradient norm decay over horizons");
  auto* v_hutch = verify->add_subcommand("hutchinson", "Hutchinson diagonal estimator checks");
  for (auto* c : {run, sweep, ablate, cmp, v_lemma1, v_rate, v_hutch}) add_common(c, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (run->parsed()) return cmd_run(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (ablate->parsed()) return cmd_ablate(args);
    if (cmp->parsed()) return cmd_compare(args);
    if (v_lemma1->parsed()) return cmd_verify("lemma1", args);
    if (v_rate->parsed()) return cmd_verify("rate", args);
    if (v_hutch->parsed()) return cmd_verify("hutchinson", args);
  } catch (const ContractError& e) {
    return fail("contract", e.what());
  } catch (const NumericError& e) {
    return fail("numeric", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return fail("usage", "no command");
}
