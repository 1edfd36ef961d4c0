#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mhdtrace/app.hpp"

namespace {

/// "--key value" and "--key=value" pairs left over by CLI11.
void apply_overrides(mhdtrace::app::RunConfig &cfg, const std::vector<std::string> &args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string &a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3)
      throw mhdtrace::app::ConfigError(a, 0, "expected an override of the form --key value");
    const std::string body = a.substr(2);
    if (const auto eq = body.find('='); eq != std::string::npos) {
      mhdtrace::app::apply_override(cfg, body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (i + 1 >= args.size()) throw mhdtrace::app::ConfigError(a, 0, "missing value");
      mhdtrace::app::apply_override(cfg, body, args[++i]);
    }
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App cli{"HDG resistive MHD trace solver with block preconditioners"};
  cli.require_subcommand(1);
  std::string config_path;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"mms", "convergence table of the manufactured solution"},
      {"solve", "single steady or transient run"},
      {"robustness", "Lundquist sweep on the island problem"},
      {"compare", "preconditioner comparison on one problem"},
      {"generic", "preconditioned solve of a MatrixMarket saddle system"},
  };
  for (const auto &[name, help] : subs) {
    auto *sc = cli.add_subcommand(name, help);
    sc->add_option("--config,-c", config_path, "INI-style configuration file")->check(CLI::ExistingFile);
    sc->allow_extras();
    sc->footer("Any config key may be overridden as --section.key value or --key value.");
  }
  CLI11_PARSE(cli, argc, argv);

  const CLI::App *chosen = cli.get_subcommands().front();
  try {
    const auto sub = mhdtrace::app::parse_subcommand(chosen->get_name());
    auto cfg = config_path.empty() ? mhdtrace::app::RunConfig{} : mhdtrace::app::parse_config_file(config_path);
    if (sub == mhdtrace::app::Subcommand::generic && !cfg.is_set("run.problem")) {
      cfg.problem = "generic";
    }
    apply_overrides(cfg, chosen->remaining());
    mhdtrace::app::resolve(cfg);
    const auto out = mhdtrace::app::run(sub, cfg, std::cout);
    std::cerr << "wrote " << out.outputs.size() << " files to " << cfg.output_dir << '\n';
    return out.exit_code;
  } catch (const mhdtrace::app::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
