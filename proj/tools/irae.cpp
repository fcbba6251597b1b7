// irae: command line front end for the surveillance pipeline.

#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "irae/app.hpp"

namespace {

int exit_code(irae::ErrorKind kind) {
  switch (kind) {
    case irae::ErrorKind::input: return 2;
    case irae::ErrorKind::config: return 3;
    case irae::ErrorKind::invariant: return 4;
    case irae::ErrorKind::data: return 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Immune-related adverse event surveillance over clinical notes"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "master seed (run.seed)");
  app.add_option("--out-dir", out_dir, "output directory (run.out_dir)");
  app.add_option("--threads", threads, "worker threads (run.threads)");
  app.add_option("--set", sets, "override one key, e.g. --set match.similarity_threshold=0.85");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth", "generate a synthetic corpus with gold labels"},
      {"scan", "fuzzy lexicon scan and context windows"},
      {"train", "split patients and fit the two-model ensemble"},
      {"predict", "score every window with the ensemble"},
      {"aggregate", "note verdicts and patient events"},
      {"outcomes", "corticosteroid follow-up and ICI discontinuation"},
      {"survival", "Kaplan-Meier curves"},
      {"evaluate", "window AUC, patient metrics and stage-1 recall"},
      {"report", "tables and plots"},
      {"run-all", "every stage in order"},
      {"throughput", "time scan, predict and aggregate on a large synthetic corpus"},
      {"config", "print the effective configuration"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) subs[name] = app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    irae::RunConfig cfg;
    if (!config_path.empty()) irae::apply_config_file(cfg, config_path);
    irae::apply_environment(cfg);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw irae::config_error(fmt::format("--set expects key=value, got '{}'", s));
      irae::set_config_value(cfg, irae::detail::trim(s.substr(0, eq)), irae::detail::trim(s.substr(eq + 1)));
    }
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (threads) cfg.threads = *threads;
    cfg.validate();

    const std::map<std::string, std::function<void()>> run{
        {"synth", [&] { irae::cmd_synth(cfg); }},
        {"scan", [&] { irae::cmd_scan(cfg); }},
        {"train", [&] { irae::cmd_train(cfg); }},
        {"predict", [&] { irae::cmd_predict(cfg); }},
        {"aggregate", [&] { irae::cmd_aggregate(cfg); }},
        {"outcomes", [&] { irae::cmd_outcomes(cfg); }},
        {"survival", [&] { irae::cmd_survival(cfg); }},
        {"evaluate", [&] { irae::cmd_evaluate(cfg); }},
        {"report", [&] { irae::cmd_report(cfg); }},
        {"run-all", [&] { irae::cmd_run_all(cfg); }},
        {"throughput", [&] { fmt::print("{}\n", irae::to_json(irae::cmd_throughput(cfg)).dump(2)); }},
        {"config", [&] { fmt::print("{}", irae::dump_config(cfg)); }},
    };
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) run.at(name)();
    return 0;
  } catch (const irae::Error& e) {
    fmt::print(stderr, "irae: error: {}\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "irae: error: {}\n", e.what());
    return 1;
  }
}
