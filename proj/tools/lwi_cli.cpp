// Command-line front end. Exit codes: 0 ok, 2 config, 3 numerical, 4 io.
#include <iostream>

#include <CLI11.hpp>

#include "lwi/experiments.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string ledger;
};

lwi::ExperimentConfig resolve(lwi::Experiment e, const Options& o) {
  lwi::ExperimentConfig cfg = o.config.empty() ? lwi::default_config(e) : lwi::load_config(o.config, e);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

int run(const std::string& verb, const Options& o) {
  lwi::RunOptions ro{std::max(1u, o.threads), &std::cerr};
  if (verb == "ledger-dump") {
    const std::string path = !o.ledger.empty() ? o.ledger : (o.out.empty() ? "out" : o.out) + std::string("/ledger.csv");
    std::cout << lwi::summarize_ledger_csv(lwi::read_text(path));
    return kOk;
  }
  const lwi::Experiment e = lwi::parse_experiment(verb);
  const lwi::ExperimentConfig cfg = resolve(e, o);
  switch (e) {
    case lwi::Experiment::forward: lwi::run_forward_experiment(cfg, ro); break;
    case lwi::Experiment::invert: lwi::run_invert_experiment(cfg, ro); break;
    case lwi::Experiment::inclusion: {
      const auto r = lwi::run_inclusion_experiment(cfg, ro);
      std::cout << r.summary.dump(2) << "\n";
      break;
    }
    case lwi::Experiment::timelapse: {
      const auto r = lwi::run_timelapse_experiment(cfg, ro);
      std::cout << r.summary.dump(2) << "\n";
      break;
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Localized wavefield inversion toolkit"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> verbs[] = {
      {"forward", "synthesize data for a model"},
      {"invert", "invert data with LWI, IR-WRI or multi-block ADMM"},
      {"inclusion", "compare DA and naive target wavefields"},
      {"timelapse", "baseline and monitor inversion study"},
      {"ledger-dump", "summarize a solve ledger"}};
  for (const auto& [verb, help] : verbs) {
    CLI::App* sub = app.add_subcommand(verb, help);
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", seed, "rng seed");
    sub->add_option("--threads", o.threads, "worker threads for forward modeling");
    if (std::string(verb) == "ledger-dump") sub->add_option("ledger", o.ledger, "ledger csv (default OUT/ledger.csv)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string verb = sub->get_name();
  if (sub->get_option("--seed")->count() > 0) o.seed = seed;
  try {
    return run(verb, o);
  } catch (const lwi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const lwi::GeometryError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const lwi::DegeneratePartitionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const lwi::AssemblyError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const lwi::ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const lwi::FormatError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const lwi::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const lwi::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}
