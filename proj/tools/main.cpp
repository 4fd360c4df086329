#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "recipcal/config.hpp"
#include "recipcal/harness.hpp"
#include "recipcal/two_step.hpp"
#include "selftest.hpp"

using namespace recipcal;
using nlohmann::json;

namespace {

json to_json(const CVector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
  return arr;
}

// Calibrates the first AP against the first user of trial 0 and writes the
// estimates next to the planted truth.
int cmd_calibrate(const std::string& config_path, std::optional<std::uint64_t> seed,
                  const std::string& out_path) {
  SystemConfig cfg = load_config(config_path);
  if (seed) cfg.master_seed = *seed;
  const Scenario sc = draw_scenario(cfg, 0);
  Rng noise = make_stream(cfg.master_seed, 0, StreamTag::kNoise);
  DuplexLink link =
      DuplexLink::make(sc.aps[0], sc.users[0], sc.ap_to_user[0][0], cfg.noise_variance);
  const PairCalibration p =
      calibrate_pair(link, dft_codebook(cfg.antennas_ap), dft_codebook(cfg.antennas_mu), noise);

  const NodeProfile& ap = sc.aps[0];
  const NodeProfile& mu = sc.users[0];
  json report = {
      {"master_seed", cfg.master_seed},
      {"noise_variance", cfg.noise_variance},
      {"antennas_ap", cfg.antennas_ap},
      {"digital_chains_ap", cfg.digital_chains_ap},
      {"antennas_mu", cfg.antennas_mu},
      {"digital_chains_mu", cfg.digital_chains_mu},
      {"pilots", {{"forward", p.pilots_forward}, {"reverse", p.pilots_reverse}}},
      {"residual", p.estimate.residual},
      {"ambiguous", p.estimate.ambiguous},
      {"ap",
       {{"t1_hat", to_json(p.first.t1)},
        {"r1_hat", to_json(p.first.r1)},
        {"alpha_hat", to_json(p.estimate.alpha_hat)},
        {"mse_t1", normalized_mse(p.first.t1, ap.t1)},
        {"mse_r1", normalized_mse(p.first.r1, ap.r1)},
        {"mse_alpha", normalized_mse(p.estimate.alpha_hat, ap.analog_ratio())}}},
      {"mu",
       {{"t1_hat", to_json(p.second.t1)},
        {"r1_hat", to_json(p.second.r1)},
        {"alpha_hat", to_json(p.estimate.alpha_hat_peer)},
        {"mse_t1", normalized_mse(p.second.t1, mu.t1)},
        {"mse_r1", normalized_mse(p.second.r1, mu.r1)},
        {"mse_alpha", normalized_mse(p.estimate.alpha_hat_peer, mu.analog_ratio())}}},
  };
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw Error("cannot open " + out_path + " for writing");
  os << report.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis, const std::string& values,
              const std::string& out_path, int workers) {
  const SystemConfig cfg = load_config(config_path);
  const auto rows = sweep(cfg, parse_axis(axis), parse_value_list(values), workers);
  write_csv(out_path, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reciprocity calibration simulator for distributed hybrid-beamforming MIMO"};
  app.require_subcommand(1);

  std::string config, out, axis, values;
  std::optional<std::uint64_t> seed;
  int workers = 0;

  auto* cal = app.add_subcommand("calibrate", "Calibrate one AP <-> MU link and write a JSON report");
  cal->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  cal->add_option("--seed", seed, "Override master_seed");
  cal->add_option("--out", out, "Output JSON path")->required();

  auto* sw = app.add_subcommand("sweep", "Monte Carlo sweep over one parameter, written as CSV");
  sw->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axis,
                 "noise, aps, users, mismatch_mag, mismatch_phase or mismatch_both")
      ->required();
  sw->add_option("--values", values, "Comma separated axis values")->required();
  sw->add_option("--out", out, "Output CSV path")->required();
  sw->add_option("--workers", workers, "Worker threads (0: all cores)");

  auto* st = app.add_subcommand("selftest", "Run the planted-solution and oracle checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cal->parsed()) return cmd_calibrate(config, seed, out);
    if (sw->parsed()) return cmd_sweep(config, axis, values, out, workers);
    if (st->parsed()) return cli::run_selftest(std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
