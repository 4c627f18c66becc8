#include <msp/msp.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

int run_command(const std::string& config_path, const std::optional<std::string>& output_dir,
                const std::optional<std::uint64_t>& seed) {
  msp::RunConfig config;
  try {
    config = msp::load_config(config_path);
  } catch (const msp::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return msp::to_int(msp::ExitCode::config_error);
  }
  if (seed) config.seed = *seed;
  std::optional<std::filesystem::path> dir;
  if (output_dir) dir = *output_dir;
  const auto outcome = msp::run_scenario(config, dir);
  if (outcome.code == msp::ExitCode::ok) {
    const auto& r = *outcome.result;
    std::printf("%s: converged, covered t in [0, %g] with horizon %g in %zu segment(s)\n", config.name.c_str(),
                r.covered, r.T_used, r.attempts.size());
  } else {
    std::cerr << config.name << ": " << outcome.message << "\n";
  }
  for (const auto& f : outcome.files) std::printf("wrote %s\n", f.string().c_str());
  return msp::to_int(outcome.code);
}

int verify_command(const std::optional<std::vector<std::string>>& subset, const std::string& fault) {
  msp::VerifyOptions options;
  if (subset) {
    options.subset.emplace();
    for (const auto& name : *subset)
      if (!name.empty()) options.subset->push_back(name);
  }
  if (fault == "divergence") {
    options.fault = msp::Fault::divergence;
  } else if (fault != "none") {
    std::cerr << "verify: unknown fault '" << fault << "'\n";
    return msp::to_int(msp::ExitCode::config_error);
  }
  msp::VerifyReport report;
  try {
    report = msp::verify_suite(options);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return msp::to_int(msp::ExitCode::config_error);
  }
  msp::print_report(std::cout, report);
  return msp::to_int(report.all_passed() ? msp::ExitCode::ok : msp::ExitCode::verification_failed);
}

int info_command(const std::string& path) {
  msp::Snapshot s;
  try {
    s = msp::read_snapshot(path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return msp::to_int(msp::ExitCode::failure);
  }
  std::cout << msp::snapshot_header(s).dump(2) << "\n";
  if (const auto* psi = std::get_if<msp::ScalarField>(&s.field)) {
    std::printf("l2_norm %.17g\nh2_norm %.17g\n", msp::l2_norm(*psi), msp::sobolev_norm(*psi, 2.0));
    if (psi->grid.dim == 6)
      std::printf("symmetry_residual(+1) %.17g\nsymmetry_residual(-1) %.17g\n", msp::symmetry_residual(*psi, 1),
                  msp::symmetry_residual(*psi, -1));
  } else {
    const auto& a = std::get<msp::VectorField>(s.field);
    std::printf("l2_norm %.17g\nh1_norm %.17g\ndivergence_residual %.17g\n", msp::l2_norm(a), msp::sobolev_norm(a, 1.0),
                msp::divergence_residual(a));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudospectral many-body Maxwell-Schrodinger solver"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one scenario from a JSON configuration");
  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  run->add_option("config", config_path, "Configuration file")->required();
  auto* output_opt = run->add_option("-o,--output-dir", output_dir, "Override the configured output directory");
  auto* seed_opt = run->add_option("--seed", seed, "Override the configured random seed");

  auto* verify = app.add_subcommand("verify", "Run the built-in invariant checks");
  std::vector<std::string> subset;
  std::string fault = "none";
  auto* subset_opt = verify->add_option("--subset", subset, "Suites to run (default: all)")->expected(0, -1)->delimiter(',');
  verify->add_option("--inject-fault", fault, "Deliberate fault: none or divergence");

  auto* info = app.add_subcommand("info", "Describe a snapshot file");
  std::string snapshot_path;
  info->add_option("snapshot", snapshot_path, "Snapshot file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return msp::to_int(msp::ExitCode::config_error);
  }

  try {
    if (run->parsed())
      return run_command(config_path, output_opt->count() ? std::optional(output_dir) : std::nullopt,
                         seed_opt->count() ? std::optional(seed) : std::nullopt);
    if (verify->parsed())
      return verify_command(subset_opt->count() ? std::optional(subset) : std::nullopt, fault);
    if (info->parsed()) return info_command(snapshot_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return msp::to_int(msp::ExitCode::failure);
  }
  return msp::to_int(msp::ExitCode::failure);
}
