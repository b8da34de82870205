// modeforge command-line driver: one subcommand per pipeline stage plus
// `run` for the whole chain.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "modeforge/config.hpp"
#include "modeforge/log.hpp"
#include "modeforge/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "pipeline config file (TOML subset)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--threads", o.threads, "worker cap; output does not depend on it")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "overrides [global] seed");
}

modeforge::PipelineConfig load(const Options& o) {
  auto c = modeforge::load_config(o.config);
  if (o.threads) c.threads = *o.threads;
  if (o.seed) c.seed = *o.seed;
  c.apply_globals();
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modeforge: travel-mode imputation from GPS traces"};
  app.require_subcommand(1);
  Options opts;
  std::string stage;
  for (const auto& name : modeforge::pipeline::stage_names()) {
    auto* cmd = app.add_subcommand(name, "run the " + name + " stage");
    add_common(cmd, opts);
    cmd->callback([&stage, name] { stage = name; });
  }
  auto* run = app.add_subcommand("run", "run every stage in order");
  add_common(run, opts);
  run->callback([&stage] { stage = "run"; });

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load(opts);
    if (stage == "run") {
      modeforge::pipeline::run_all(cfg);
    } else {
      modeforge::pipeline::run_stage(stage, cfg);
    }
  } catch (const modeforge::pipeline::StageError& e) {
    std::fprintf(stderr, "modeforge: error: %s\n", e.what());
    return 2;
  } catch (const modeforge::Error& e) {
    std::fprintf(stderr, "modeforge: error: stage=config kind=%s: %s\n", modeforge::to_string(e.kind()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "modeforge: error: %s\n", e.what());
    return 3;
  }
  return 0;
}
