#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fedsim/config.hpp"
#include "fedsim/report.hpp"
#include "fedsim/simulator.hpp"
#include "fedsim/theory.hpp"
#include "fedsim/util.hpp"

namespace {

using namespace fedsim;

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto seed : resolved_seeds(cfg)) {
    const Experiment exp = Experiment::prepare(cfg, seed);
    const auto path =
        (std::filesystem::path(out_dir) / manifest_filename(seed)).string();
    write_manifest(path, exp.manifest);
    std::int64_t total = 0;
    for (const auto& c : exp.clients) total += c.size();
    std::cout << "manifest " << path << " clients=" << exp.manifest.clients
              << " classes=" << exp.manifest.classes << " samples=" << total
              << " checksum=" << exp.manifest.checksum << '\n';
  }
  return 0;
}

int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir) {
  const ExperimentResult result = run_experiment(cfg, out_dir, &std::cout);
  std::cout << "metrics written to " << out_dir << " for "
            << result.runs.size() << " seed(s)\n";
  return 0;
}

int cmd_report(const ExperimentConfig& cfg, const std::string& out_dir,
               const std::vector<std::string>& files) {
  const ReportTable table = build_report(files, cfg.report.targets);
  std::cout << report_text(table);
  std::filesystem::create_directories(out_dir);
  const auto path = (std::filesystem::path(out_dir) / "report.csv").string();
  write_file_atomic(path, report_csv(table));
  std::cout << "report written to " << path << '\n';
  return 0;
}

int cmd_theory(const ExperimentConfig& cfg) {
  TheoryConstants consts;
  consts.l1 = cfg.theory.l1;
  consts.l2 = cfg.theory.l2;
  consts.grad_bound = cfg.theory.grad_bound;
  consts.sigma2 = cfg.theory.sigma2;
  consts.local_steps = cfg.train.epochs;
  consts.classes = cfg.data.classes;
  consts.neighbors = cfg.fedskc.neighbors;
  consts.eta = cfg.train.eta;

  const EtaMaxResult eta_max = theorem2_eta_max(consts);
  const double drop = theorem1_drop(consts);
  std::string rounds;
  try {
    rounds = std::to_string(theorem3_min_rounds(
        consts, cfg.theory.xi, cfg.theory.loss0, cfg.theory.loss_star));
  } catch (const ContractError& e) {
    rounds = e.what();
  }

  std::cout << std::left;
  std::cout << std::setw(34)
            << "largest admissible learning rate"
            << (eta_max.admissible ? format_double(eta_max.eta_max)
                                   : std::string("0 (no admissible rate)"))
            << '\n';
  std::cout << std::setw(34)
            << ("per-round drop bound at eta=" + format_double(consts.eta))
            << format_double(drop) << '\n';
  std::cout << std::setw(34)
            << ("min rounds at xi=" + format_double(cfg.theory.xi) +
                ", loss gap=" +
                format_double(cfg.theory.loss0 - cfg.theory.loss_star))
            << rounds << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic single-process federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::string seeds_csv;
  std::vector<std::string> overrides;
  std::vector<std::string> metric_files;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--set", overrides,
                    "Override a config entry as key=value (repeatable)");
    sub->add_option("--out", out_flag, "Output directory");
    sub->add_option("--seeds", seeds_csv, "Comma-separated seed list");
  };

  CLI::App* gen = app.add_subcommand(
      "gen-data", "Generate partitioned data and write manifests");
  CLI::App* run = app.add_subcommand("run", "Run the configured experiment");
  CLI::App* rep = app.add_subcommand(
      "report", "Summarize metrics files into a comparison table");
  CLI::App* theory =
      app.add_subcommand("theory", "Print the convergence-bound table");
  add_common(gen);
  add_common(run);
  add_common(rep);
  add_common(theory);
  rep->add_option("files", metric_files, "Per-run metrics CSV files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!seeds_csv.empty()) overrides.push_back("seeds=" + seeds_csv);
    const ExperimentConfig cfg =
        config_path.empty() ? parse_config_text("", overrides, "<defaults>")
                            : parse_config(config_path, overrides);
    const std::string out_dir = out_flag.empty() ? cfg.out : out_flag;
    if (gen->parsed()) return cmd_gen_data(cfg, out_dir);
    if (run->parsed()) return cmd_run(cfg, out_dir);
    if (rep->parsed()) return cmd_report(cfg, out_dir, metric_files);
    if (theory->parsed()) return cmd_theory(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const RunAbortError& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
