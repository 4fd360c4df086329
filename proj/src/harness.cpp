#include "recipcal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "recipcal/beamsearch.hpp"
#include "recipcal/estimation.hpp"
#include "recipcal/two_step.hpp"
#include "recipcal/zfbf.hpp"

namespace recipcal {

double normalized_mse(const CVector& est, const CVector& truth) {
  if (est.size() != truth.size() || est.size() == 0) {
    throw DimensionError("normalized_mse: vectors must be nonempty and of equal length");
  }
  const CVector e = normalize_first(est);
  const CVector t = normalize_first(truth);
  return (e - t).squaredNorm() / t.squaredNorm();
}

std::uint64_t pilot_budget(const SystemConfig& cfg) {
  const auto digital = static_cast<std::uint64_t>(cfg.digital_chains_ap + cfg.digital_chains_mu);
  const std::uint64_t analog =
      observation_pilots(cfg.antennas_ap, cfg.antennas_mu, cfg.digital_chains_mu) +
      observation_pilots(cfg.antennas_mu, cfg.antennas_ap, cfg.digital_chains_ap);
  const std::uint64_t uplink =
      observation_pilots(cfg.antennas_mu, cfg.antennas_ap, cfg.digital_chains_ap);
  const auto links = static_cast<std::uint64_t>(cfg.num_aps) * cfg.num_users;
  const std::uint64_t inter_ap =
      2 * static_cast<std::uint64_t>(cfg.digital_chains_ap) +
      2 * observation_pilots(cfg.antennas_ap, cfg.antennas_ap, cfg.digital_chains_ap) + 2;
  return links * (digital + analog + uplink) +
         static_cast<std::uint64_t>(cfg.num_aps - 1) * inter_ap;
}

namespace {

// Entity ids inside the profile and channel streams.
constexpr std::uint64_t kUserEntity = 1ULL << 32;
constexpr std::uint64_t kInterApEntity = 1ULL << 48;

std::uint64_t link_entity(int ap, int user) {
  return (static_cast<std::uint64_t>(ap) << 20) | static_cast<std::uint64_t>(user);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

MetricSummary summarize_values(const std::vector<double>& v) {
  MetricSummary m;
  m.mean = mean(v);
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return m;
}

/// Sum rate on `h_eval` of the ZF precoder designed from `h_design`.
double zf_rate(const CMatrix& h_design, const CMatrix& h_eval, const RVector& powers, double noise) {
  const ZfPrecoder zf = zf_precoder(h_design);
  return sum_rate(sinr_per_user(h_eval, {zf.w, powers, noise}));
}

CMatrix stack_blocks(const std::vector<CMatrix>& blocks) {
  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.cols();
  CMatrix out(rows, blocks.front().rows());
  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    out.middleRows(offset, b.cols()) = b.transpose();
    offset += b.cols();
  }
  return out;
}

TrialDetail run_trial_impl(const SystemConfig& cfg, std::uint64_t trial_index) {
  const Scenario sc = draw_scenario(cfg, trial_index);
  Rng noise = make_stream(cfg.master_seed, trial_index, StreamTag::kNoise);
  const BeamformerMatrix ap_beams = dft_codebook(cfg.antennas_ap);
  const BeamformerMatrix mu_beams = dft_codebook(cfg.antennas_mu);
  const int k_aps = cfg.num_aps;
  const int users = cfg.num_users;
  const int mmu = cfg.antennas_mu;

  TrialDetail detail;
  TrialMetrics& m = detail.metrics;
  m.seed = derive_seed(cfg.master_seed, trial_index, StreamTag::kTrial);
  std::uint64_t pilots = 0;

  // Two-step calibration and uplink estimation on every AP <-> MU link.
  std::vector<std::vector<XZMatrices>> ap_systems(k_aps);
  std::vector<std::vector<CVector>> mu_alpha(k_aps);
  std::vector<std::vector<UplinkEstimate>> uplink(k_aps);
  std::vector<double> mse_t1, mse_r1, mse_alpha, mse_alpha_peer;
  for (int k = 0; k < k_aps; ++k) {
    for (int u = 0; u < users; ++u) {
      DuplexLink link =
          DuplexLink::make(sc.aps[k], sc.users[u], sc.ap_to_user[k][u], cfg.noise_variance);
      const PairCalibration pair = calibrate_pair(link, ap_beams, mu_beams, noise);
      uplink[k].push_back(
          estimate_ul_effective(link.reverse, ap_beams, mu_beams, pair.first.r1, noise, k));
      ap_systems[k].push_back(pair.xz);
      mu_alpha[k].push_back(pair.estimate.alpha_hat_peer);

      mse_t1.push_back(normalized_mse(pair.first.t1, sc.aps[k].t1));
      mse_r1.push_back(normalized_mse(pair.first.r1, sc.aps[k].r1));
      mse_alpha_peer.push_back(
          normalized_mse(pair.estimate.alpha_hat_peer, sc.users[u].analog_ratio()));
      pilots += link.forward.tx_counter + link.reverse.tx_counter;
    }
  }

  // Two-step calibration between the reference AP and every other AP.
  std::vector<DuplexLink> inter(k_aps);
  std::vector<BeamPair> inter_beams(k_aps);
  for (int k = 1; k < k_aps; ++k) {
    inter[k] = DuplexLink::make(sc.aps[0], sc.aps[k], sc.reference_to_ap[k], cfg.noise_variance);
    const PairCalibration pair = calibrate_pair(inter[k], ap_beams, ap_beams, noise);
    ap_systems[0].push_back(pair.xz);
    ap_systems[k].push_back(swap_roles(pair.xz));
    inter_beams[k] = pair.forward_beams;
  }

  // Each AP's analog ratios from all of its links at once.
  std::vector<CVector> ap_alpha(k_aps);
  for (int k = 0; k < k_aps; ++k) {
    ap_alpha[k] = solve_star_analog_ls(ap_systems[k]).center;
    mse_alpha.push_back(normalized_mse(ap_alpha[k], sc.aps[k].analog_ratio()));
  }

  // Third step: two pilots per non-reference AP over its strongest beam pair.
  std::vector<cd> ratios(k_aps, cd{1.0, 0.0});
  for (int k = 1; k < k_aps; ++k) {
    const InterApRatio r =
        inter_ap_ratio(inter[k], ap_alpha[0], ap_alpha[k], ap_beams.columns.col(inter_beams[k].tx),
                       ap_beams.columns.col(inter_beams[k].rx), noise);
    ratios[k] = r.c_hat;
    pilots += inter[k].forward.tx_counter + inter[k].reverse.tx_counter;
  }

  std::vector<EffectiveChannel> dl_calibrated(k_aps), dl_raw(k_aps);
  for (int k = 0; k < k_aps; ++k) {
    dl_calibrated[k].matrix.resize(users * mmu, cfg.antennas_ap);
    dl_raw[k].matrix.resize(users * mmu, cfg.antennas_ap);
    dl_calibrated[k].ap_id = dl_raw[k].ap_id = k;
    for (int u = 0; u < users; ++u) {
      const EffectiveChannel dl = dl_from_ul(uplink[k][u].channel, ap_alpha[k], mu_alpha[k][u]);
      // Naive reciprocity: no digital, analog or inter-AP correction.
      const EffectiveChannel raw = ul_effective_from_observation(
          uplink[k][u].observation, ap_beams.columns, mu_beams.columns,
          CVector::Ones(cfg.digital_chains_ap), k);
      dl_calibrated[k].matrix.middleRows(u * mmu, mmu) = dl.matrix;
      dl_raw[k].matrix.middleRows(u * mmu, mmu) = raw.matrix.transpose();
    }
  }

  const CMatrix h_calibrated = assemble_multi_ap(dl_calibrated, ratios);
  const CMatrix h_raw = assemble_multi_ap(dl_raw, std::vector<cd>(k_aps, cd{1.0, 0.0}));
  const CMatrix h_true = stack_blocks(true_downlink_blocks(sc));

  // Rates are evaluated at the SNR set by the propagation channel alone;
  // hardware gain is taken out by power control.
  std::vector<CMatrix> propagation;
  for (int k = 0; k < k_aps; ++k) {
    CMatrix block(users * mmu, cfg.antennas_ap);
    for (int u = 0; u < users; ++u) block.middleRows(u * mmu, mmu) = sc.ap_to_user[k][u].matrix;
    propagation.push_back(block);
  }
  const CMatrix h_eval = h_true * (stack_blocks(propagation).norm() / h_true.norm());

  const RVector powers = equal_power(users * mmu, cfg.tx_power);
  const double rate_noise = std::max(cfg.noise_variance, kRateNoiseFloor * cfg.tx_power);
  m.sum_rate_perfect = zf_rate(h_true, h_eval, powers, rate_noise);
  m.sum_rate_calibrated = zf_rate(h_calibrated, h_eval, powers, rate_noise);
  m.sum_rate_uncalibrated = zf_rate(h_raw, h_eval, powers, rate_noise);

  m.mse_t1 = mean(mse_t1);
  m.mse_r1 = mean(mse_r1);
  m.mse_alpha = mean(mse_alpha);
  m.mse_alpha_peer = mean(mse_alpha_peer);
  m.pilots_total = pilots;
  detail.h_true = h_true;
  detail.h_calibrated = h_calibrated;
  detail.h_uncalibrated = h_raw;
  detail.ratios = std::move(ratios);
  return detail;
}

}  // namespace

Scenario draw_scenario(const SystemConfig& cfg, std::uint64_t trial_index) {
  cfg.validate();
  const auto seed = cfg.master_seed;
  Scenario s;
  for (int k = 0; k < cfg.num_aps; ++k) {
    Rng r = make_entity_stream(seed, trial_index, StreamTag::kProfiles, static_cast<std::uint64_t>(k));
    s.aps.push_back(gen_mismatch_profile(cfg.digital_chains_ap, cfg.antennas_ap,
                                         cfg.mismatch_sigma_mag, cfg.mismatch_sigma_phase, r));
  }
  for (int u = 0; u < cfg.num_users; ++u) {
    Rng r = make_entity_stream(seed, trial_index, StreamTag::kProfiles,
                               kUserEntity + static_cast<std::uint64_t>(u));
    s.users.push_back(gen_mismatch_profile(cfg.digital_chains_mu, cfg.antennas_mu,
                                           cfg.mismatch_sigma_mag, cfg.mismatch_sigma_phase, r));
  }
  s.ap_to_user.resize(cfg.num_aps);
  for (int k = 0; k < cfg.num_aps; ++k) {
    for (int u = 0; u < cfg.num_users; ++u) {
      Rng r = make_entity_stream(seed, trial_index, StreamTag::kChannels, link_entity(k, u));
      s.ap_to_user[k].push_back(
          gen_multipath_channel(cfg.num_paths, cfg.antennas_mu, cfg.antennas_ap, r));
    }
  }
  s.reference_to_ap.resize(cfg.num_aps);
  for (int k = 1; k < cfg.num_aps; ++k) {
    Rng r = make_entity_stream(seed, trial_index, StreamTag::kChannels,
                               kInterApEntity + static_cast<std::uint64_t>(k));
    s.reference_to_ap[k] =
        gen_multipath_channel(cfg.num_paths, cfg.antennas_ap, cfg.antennas_ap, r);
  }
  return s;
}

std::vector<CMatrix> true_downlink_blocks(const Scenario& s) {
  std::vector<CMatrix> blocks;
  const auto users = static_cast<int>(s.users.size());
  for (std::size_t k = 0; k < s.aps.size(); ++k) {
    const NodeProfile& ap = s.aps[k];
    const int mmu = users > 0 ? s.users[0].antennas() : 0;
    CMatrix block(users * mmu, ap.antennas());
    for (int u = 0; u < users; ++u) {
      const NodeProfile& mu = s.users[u];
      block.middleRows(u * mmu, mmu) = (ap.t1(0) * mu.r1(0)) * mu.r2.asDiagonal() *
                                       s.ap_to_user[k][u].matrix * ap.t2.asDiagonal();
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

TrialMetrics run_trial(const SystemConfig& cfg, std::uint64_t trial_index) {
  return run_trial_detailed(cfg, trial_index).metrics;
}

TrialDetail run_trial_detailed(const SystemConfig& cfg, std::uint64_t trial_index) {
  try {
    return run_trial_impl(cfg, trial_index);
  } catch (const TrialError&) {
    throw;
  } catch (const std::exception& e) {
    throw TrialError(trial_index, e.what());
  }
}

SweepAxis parse_axis(std::string_view name) {
  if (name == "noise") return SweepAxis::kNoise;
  if (name == "aps") return SweepAxis::kAps;
  if (name == "users") return SweepAxis::kUsers;
  if (name == "mismatch_mag") return SweepAxis::kMismatchMag;
  if (name == "mismatch_phase") return SweepAxis::kMismatchPhase;
  if (name == "mismatch_both") return SweepAxis::kMismatchBoth;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNoise: return "noise";
    case SweepAxis::kAps: return "aps";
    case SweepAxis::kUsers: return "users";
    case SweepAxis::kMismatchMag: return "mismatch_mag";
    case SweepAxis::kMismatchPhase: return "mismatch_phase";
    case SweepAxis::kMismatchBoth: return "mismatch_both";
  }
  return "unknown";
}

SystemConfig apply_axis(SystemConfig cfg, SweepAxis axis, double value) {
  auto as_count = [&](const char* what) {
    if (!(value >= 1.0) || value != std::floor(value) || value > 1e6) {
      throw ConfigError(std::string("sweep: ") + what + " must be a positive integer, got " +
                        std::to_string(value));
    }
    return static_cast<int>(value);
  };
  auto as_sigma = [&] {
    if (!(value >= 0.0)) throw ConfigError("sweep: mismatch spread must be >= 0");
    return value;
  };
  switch (axis) {
    case SweepAxis::kNoise:
      if (!(value >= 0.0)) throw ConfigError("sweep: noise variance must be >= 0");
      cfg.noise_variance = value;
      break;
    case SweepAxis::kAps: cfg.num_aps = as_count("number of APs"); break;
    case SweepAxis::kUsers: cfg.num_users = as_count("number of users"); break;
    case SweepAxis::kMismatchMag:
      cfg.mismatch_sigma_mag = as_sigma();
      cfg.mismatch_sigma_phase = 0.0;
      break;
    case SweepAxis::kMismatchPhase:
      cfg.mismatch_sigma_phase = as_sigma();
      cfg.mismatch_sigma_mag = 0.0;
      break;
    case SweepAxis::kMismatchBoth:
      cfg.mismatch_sigma_mag = cfg.mismatch_sigma_phase = as_sigma();
      break;
  }
  cfg.validate();
  return cfg;
}

SweepRow summarize(double axis_value, std::vector<TrialMetrics> trials) {
  SweepRow row;
  row.axis_value = axis_value;
  row.trials = static_cast<int>(trials.size());
  auto pick = [&](auto field) {
    std::vector<double> v;
    v.reserve(trials.size());
    for (const auto& t : trials) v.push_back(field(t));
    return summarize_values(v);
  };
  row.mse_t1 = pick([](const TrialMetrics& t) { return t.mse_t1; });
  row.mse_r1 = pick([](const TrialMetrics& t) { return t.mse_r1; });
  row.mse_alpha = pick([](const TrialMetrics& t) { return t.mse_alpha; });
  row.mse_alpha_peer = pick([](const TrialMetrics& t) { return t.mse_alpha_peer; });
  row.sum_rate_perfect = pick([](const TrialMetrics& t) { return t.sum_rate_perfect; });
  row.sum_rate_calibrated = pick([](const TrialMetrics& t) { return t.sum_rate_calibrated; });
  row.sum_rate_uncalibrated = pick([](const TrialMetrics& t) { return t.sum_rate_uncalibrated; });
  row.rate_gap = pick(
      [](const TrialMetrics& t) { return t.sum_rate_calibrated - t.sum_rate_uncalibrated; });
  row.pilots_total = trials.empty() ? 0 : trials.front().pilots_total;
  row.per_trial = std::move(trials);
  return row;
}

std::vector<SweepRow> sweep(const SystemConfig& cfg, SweepAxis axis,
                            const std::vector<double>& values, int workers) {
  if (values.empty()) throw ConfigError("sweep: no axis values given");
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<SweepRow> rows;
  for (double value : values) {
    const SystemConfig point = apply_axis(cfg, axis, value);
    const auto n = static_cast<std::size_t>(point.num_trials);
    std::vector<TrialMetrics> trials(n);
    const auto nworkers = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    if (nworkers <= 1) {
      for (std::size_t t = 0; t < n; ++t) trials[t] = run_trial(point, t);
    } else {
      // Strided split; every slot is written by exactly one worker, and the
      // first error (lowest trial index) wins.
      std::vector<std::exception_ptr> errors(n);
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < nworkers; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t t = w; t < n; t += nworkers) {
            try {
              trials[t] = run_trial(point, t);
            } catch (...) {
              errors[t] = std::current_exception();
            }
          }
        });
      }
      pool.clear();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    rows.push_back(summarize(value, std::move(trials)));
  }
  return rows;
}

std::string to_csv(const std::vector<SweepRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out += buf;
  };
  for (const auto& r : rows) {
    num(r.axis_value);
    out += ',' + std::to_string(r.trials) + ',';
    for (const auto* s : {&r.mse_t1, &r.mse_r1, &r.mse_alpha, &r.mse_alpha_peer,
                          &r.sum_rate_perfect, &r.sum_rate_calibrated,
                          &r.sum_rate_uncalibrated}) {
      num(s->mean);
      out += ',';
    }
    out += std::to_string(r.pilots_total);
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const std::string csv = to_csv(rows);
  os.write(csv.data(), static_cast<std::streamsize>(csv.size()));
  if (!os) throw Error("failed writing " + path.string());
}

std::vector<double> parse_value_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    std::string item(text.substr(pos, end - pos));
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) throw ConfigError("value list has an empty entry");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("cannot parse value '" + item + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace recipcal
