#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "recipcal/calibration.hpp"
#include "recipcal/model.hpp"

namespace recipcal {

struct TrialMetrics {
  std::uint64_t seed = 0;
  double mse_t1 = 0.0;          // AP transmit digital chains
  double mse_r1 = 0.0;          // AP receive digital chains
  double mse_alpha = 0.0;       // AP analog ratios
  double mse_alpha_peer = 0.0;  // MU analog ratios
  double sum_rate_calibrated = 0.0;
  double sum_rate_uncalibrated = 0.0;
  double sum_rate_perfect = 0.0;
  std::uint64_t pilots_total = 0;

  friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

/// A run_trial failure, tagged with the trial that raised it.
class TrialError : public Error {
 public:
  TrialError(std::uint64_t trial_index, const std::string& what)
      : Error("trial " + std::to_string(trial_index) + ": " + what), trial_index_(trial_index) {}
  std::uint64_t trial_index() const { return trial_index_; }

 private:
  std::uint64_t trial_index_;
};

/// ||est/est0 - truth/truth0||^2 / ||truth/truth0||^2.
double normalized_mse(const CVector& est, const CVector& truth);

/// Pilots a trial spends with `cfg`: per AP<->MU link the digital step in
/// both directions, the analog step in both directions and the uplink
/// channel estimate; per non-reference AP the two-step calibration with
/// the reference AP plus the two-pilot ratio exchange.
std::uint64_t pilot_budget(const SystemConfig& cfg);

/// Noise power used when evaluating rates, relative to tx_power, when the
/// configured noise variance is below it.
inline constexpr double kRateNoiseFloor = 1e-12;

/// Everything a trial draws before any pilot is sent. Entity streams are
/// independent, so e.g. adding an AP leaves existing draws unchanged.
struct Scenario {
  std::vector<NodeProfile> aps;
  std::vector<NodeProfile> users;
  std::vector<std::vector<MultipathChannel>> ap_to_user;  // [ap][user], user x ap antennas
  std::vector<MultipathChannel> reference_to_ap;          // [ap], index 0 unused
};

Scenario draw_scenario(const SystemConfig& cfg, std::uint64_t trial_index);

/// Per-AP true downlink blocks (rows: user antennas across users, columns:
/// AP antennas), including each AP's reference transmit digital chain and
/// each user's reference receive chain.
std::vector<CMatrix> true_downlink_blocks(const Scenario& s);

TrialMetrics run_trial(const SystemConfig& cfg, std::uint64_t trial_index);

/// run_trial plus the stacked downlink channels behind the metrics
/// (rows: antennas of all APs, columns: user antennas).
struct TrialDetail {
  TrialMetrics metrics;
  CMatrix h_true;
  CMatrix h_calibrated;
  CMatrix h_uncalibrated;
  std::vector<cd> ratios;  // inter-AP ratio estimates, [0] = 1
};

TrialDetail run_trial_detailed(const SystemConfig& cfg, std::uint64_t trial_index);

enum class SweepAxis { kNoise, kAps, kUsers, kMismatchMag, kMismatchPhase, kMismatchBoth };

SweepAxis parse_axis(std::string_view name);
std::string_view axis_name(SweepAxis axis);

/// `cfg` with the axis set to `value`. mismatch_mag zeroes the phase
/// spread, mismatch_phase zeroes the magnitude spread.
SystemConfig apply_axis(SystemConfig cfg, SweepAxis axis, double value);

struct MetricSummary {
  double mean = 0.0;
  double std_error = 0.0;
};

struct SweepRow {
  double axis_value = 0.0;
  int trials = 0;
  MetricSummary mse_t1, mse_r1, mse_alpha, mse_alpha_peer;
  MetricSummary sum_rate_perfect, sum_rate_calibrated, sum_rate_uncalibrated;
  /// calibrated - uncalibrated, paired per trial.
  MetricSummary rate_gap;
  std::uint64_t pilots_total = 0;
  std::vector<TrialMetrics> per_trial;
};

SweepRow summarize(double axis_value, std::vector<TrialMetrics> trials);

/// Runs cfg.num_trials trials for every value. `workers` <= 0 picks the
/// hardware concurrency. Rows do not depend on the worker count.
std::vector<SweepRow> sweep(const SystemConfig& cfg, SweepAxis axis,
                            const std::vector<double>& values, int workers = 0);

inline constexpr std::string_view kCsvHeader =
    "axis_value,trials,mse_t1,mse_r1,mse_alpha,mse_alpha_peer,sum_rate_perfect,"
    "sum_rate_calibrated,sum_rate_uncalibrated,pilots_total";

std::string to_csv(const std::vector<SweepRow>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

/// Parses "1e-6,1e-5" into numbers.
std::vector<double> parse_value_list(std::string_view text);

}  // namespace recipcal
