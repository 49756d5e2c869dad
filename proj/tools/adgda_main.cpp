// Command-line front end: run, sweep, check, version.

#include "adgda/checks.hpp"
#include "adgda/config.hpp"
#include "adgda/errors.hpp"
#include "adgda/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kDivergence = 4, kCheckFailed = 5 };

// "--key=value" or "--key value"; shorthands (--alpha, --T, ...) expand to
// dotted keys inside load_config.
adgda::KeyValues parse_overrides(const std::vector<std::string>& args) {
  adgda::KeyValues kv;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string arg = args[i];
    if (arg.rfind("--", 0) != 0 || arg.size() < 3) throw adgda::ConfigError("unexpected argument '" + arg + "'");
    arg = arg.substr(2);
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      kv[arg.substr(0, eq)] = arg.substr(eq + 1);
    } else if (i + 1 < args.size()) {
      kv[arg] = args[++i];
    } else {
      throw adgda::ConfigError("override --" + arg + " has no value");
    }
  }
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized distributionally robust learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one configuration for every seed");
  run->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  run->allow_extras();

  std::string axis, values;
  auto* sweep = app.add_subcommand("sweep", "Run a configuration across values of one axis");
  sweep->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis, "alpha | compression | topology | T")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->allow_extras();

  std::vector<std::string> suites;
  auto* check = app.add_subcommand("check", "Run the property suites");
  check->add_option("--suite", suites, "Restrict to the named suites");

  app.add_subcommand("version", "Print the version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto config = adgda::load_config(config_path, parse_overrides(run->remaining()));
      const auto summary = adgda::cmd_run(config, std::cout);
      std::cout << "wrote " << summary.directory.string() << "\n";
    } else if (*sweep) {
      adgda::SweepSpec spec{adgda::load_config(config_path, parse_overrides(sweep->remaining())), axis,
                            adgda::split_list(values)};
      const auto summaries = adgda::cmd_sweep(spec, std::cout);
      std::cout << "wrote " << summaries.size() << " runs\n";
    } else if (*check) {
      return adgda::run_checks(std::cout, suites) ? kOk : kCheckFailed;
    } else {
      std::cout << "adgda " << ADGDA_VERSION << "\n";
    }
  } catch (const adgda::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const adgda::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const adgda::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOk;
}
