#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "floodbench/harness/commands.hpp"
#include "floodbench/harness/service.hpp"

namespace {

floodbench::harness::EvalService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace floodbench;
  CLI::App app{"floodbench: flood-mask evaluation, ablation statistics and human-evaluation service"};
  app.require_subcommand(1);

  std::string manifest_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> resamples;
  std::optional<std::string> out;
  unsigned threads = util::default_threads();

  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path, "Study manifest (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Override the bootstrap seed");
    cmd->add_option("--resamples", resamples, "Override the number of bootstrap resamples")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Override the output directory");
    cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* evaluate = app.add_subcommand("evaluate", "Per-image metrics and per-model summary");
  add_run_options(evaluate);
  auto* ablate = app.add_subcommand("ablate", "Paired bootstrap ablation over the study's flag matrix");
  add_run_options(ablate);

  auto* verify = app.add_subcommand("verify", "Gradient and invariant checks of the loss kernels");
  VerifyOptions vopts;
  verify->add_option("--tolerance", vopts.tolerance, "Relative tolerance of the gradient checks");
  verify->add_option("--instances", vopts.instances, "Random instances per kernel")->check(CLI::PositiveNumber);
  verify->add_option("--seed", vopts.seed, "Instance seed");
  verify->add_option("--threads", vopts.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Human-evaluation HTTP service");
  harness::ServiceConfig scfg;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string pairs_dir, vote_log, static_dir;
  serve->add_option("--pairs-dir", pairs_dir, "Directory holding pairs.json and the images")
      ->required()
      ->check(CLI::ExistingDirectory);
  serve->add_option("--vote-log", vote_log, "JSON Lines vote log (created if absent)")->required();
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--static", static_dir, "Directory served at / (rating UI bundle)")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--quota", scfg.results.quota, "Votes collected per pair")->check(CLI::PositiveNumber);
  serve->add_option("--resamples", scfg.results.n_resamples, "Bootstrap resamples for /api/results")
      ->check(CLI::PositiveNumber);
  serve->add_option("--seed", scfg.seed, "Seed for presentation order and results bootstrap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*evaluate || *ablate) {
      const auto m = harness::load_manifest(manifest_path);
      harness::RunOptions o{seed, resamples, out ? std::optional<std::filesystem::path>(*out) : std::nullopt, threads};
      if (*evaluate) {
        const auto r = harness::cmd_evaluate(m, o);
        std::cout << "wrote " << r.records.size() << " metric records to "
                  << harness::effective_output(m, o).string() << '\n';
      } else {
        const auto r = harness::cmd_ablate(m, o);
        std::cout << harness::ablation_csv(r);
      }
      return 0;
    }
    if (*verify) {
      const auto report = harness::cmd_verify(std::cout, vopts);
      return report.pass() ? 0 : 1;
    }
    if (*serve) {
      scfg.pairs_dir = pairs_dir;
      scfg.vote_log = vote_log;
      scfg.results.seed = scfg.seed;
      if (!static_dir.empty()) scfg.static_dir = static_dir;
      harness::EvalService service(scfg);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << service.pairs().pairs.size() << " pairs on http://" << host << ":" << port << std::endl;
      if (!service.listen(host, port)) {
        std::cerr << "floodbench: cannot listen on " << host << ':' << port << '\n';
        return 1;
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "floodbench: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "floodbench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
