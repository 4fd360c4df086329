#include "selftest.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "oracles/oracles.hpp"
#include "recipcal/calibration.hpp"
#include "recipcal/harness.hpp"
#include "recipcal/two_step.hpp"

namespace recipcal::cli {

namespace {

struct Check {
  std::string name;
  std::function<std::string()> run;  // empty string on success
};

CMatrix random_matrix(int rows, int cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = complex_gaussian(rng, 1.0);
  return m;
}

std::string expect(bool ok, const std::string& why) { return ok ? std::string() : why; }

std::string planted_pair() {
  Rng rng(101);
  const NodeProfile a = gen_mismatch_profile(4, 16, 0.5, 0.5, rng);
  const NodeProfile b = gen_mismatch_profile(4, 16, 0.5, 0.5, rng);
  DuplexLink link = DuplexLink::make(a, b, gen_multipath_channel(4, 16, 16, rng), 0.0);
  const auto cb = dft_codebook(16);
  const auto p = calibrate_pair(link, cb, cb, rng);
  const double worst = std::max({normalized_mse(p.first.t1, a.t1), normalized_mse(p.first.r1, a.r1),
                                 normalized_mse(p.second.t1, b.t1), normalized_mse(p.second.r1, b.r1),
                                 normalized_mse(p.estimate.alpha_hat, a.analog_ratio()),
                                 normalized_mse(p.estimate.alpha_hat_peer, b.analog_ratio())});
  return expect(worst < 1e-10, "max normalized MSE " + std::to_string(worst));
}

std::string planted_trial() {
  SystemConfig cfg;
  cfg.noise_variance = 0.0;
  cfg.num_aps = 3;
  for (std::uint64_t t = 0; t < 5; ++t) {
    const TrialMetrics m = run_trial(cfg, t);
    const double worst = std::max({m.mse_t1, m.mse_r1, m.mse_alpha, m.mse_alpha_peer});
    if (!(worst < 1e-10)) return "trial " + std::to_string(t) + " MSE " + std::to_string(worst);
    if (std::abs(m.sum_rate_calibrated - m.sum_rate_perfect) > 1e-6 * m.sum_rate_perfect)
      return "trial " + std::to_string(t) + " calibrated rate differs from perfect CSI";
  }
  return {};
}

std::string planted_joint() {
  Rng rng(5);
  const NodeProfile n1 = gen_mismatch_profile(2, 8, 0.5, 0.5, rng);
  const NodeProfile n2 = gen_mismatch_profile(2, 8, 0.5, 0.5, rng);
  const NodeProfile n3 = gen_mismatch_profile(2, 8, 0.5, 0.5, rng);
  DuplexLink l12 = DuplexLink::make(n1, n2, gen_multipath_channel(4, 8, 8, rng), 0.0);
  DuplexLink l13 = DuplexLink::make(n1, n3, gen_multipath_channel(4, 8, 8, rng), 0.0);
  const auto cb = dft_codebook(8);
  const auto p12 = calibrate_pair(l12, cb, cb, rng);
  const auto p13 = calibrate_pair(l13, cb, cb, rng);
  const auto j = joint_analog_calibration(l12, l13, cb, cb, cb, p12.first, p12.second, p13.second, rng);
  const double worst = std::max({normalized_mse(j.alpha, n1.analog_ratio()),
                                 normalized_mse(j.alpha2, n2.analog_ratio()),
                                 normalized_mse(j.alpha3, n3.analog_ratio())});
  return expect(worst < 1e-10, "max normalized MSE " + std::to_string(worst));
}

std::string rank1_oracle() {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const CMatrix y = random_matrix(4, 4, rng);
    const double gap = std::abs(solve_rank1_ls(y).residual - oracle::rank1_alternating_objective(y));
    if (!(gap < 1e-8)) return "objective gap " + std::to_string(gap);
  }
  return {};
}

std::string analog_oracle() {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const CMatrix x = random_matrix(4, 4, rng), z = random_matrix(4, 4, rng);
    const double align =
        std::abs(solve_analog_ls(x, z).null_vector.dot(oracle::analog_smallest_eigvec(x, z)));
    if (!(align >= 1 - 1e-8)) return "alignment " + std::to_string(align);
  }
  return {};
}

std::string chain_oracle() {
  Rng rng(9);
  Link l;
  l.tx_profile = gen_mismatch_profile(4, 16, 0.5, 0.5, rng);
  l.rx_profile = gen_mismatch_profile(2, 8, 0.5, 0.5, rng);
  l.channel = gen_multipath_channel(4, 8, 16, rng);
  const CMatrix f = random_matrix(16, 4, rng), b = random_matrix(8, 2, rng);
  const CVector x = random_matrix(4, 1, rng);
  const CVector y = transmit(l, f, x, b, rng);
  const CVector ref = oracle::dense_chain(l, f, x, b);
  return expect((y - ref).norm() <= 1e-12 * ref.norm(), "relative error too large");
}

std::string pilot_budgets() {
  Rng rng(10);
  const NodeProfile a = gen_mismatch_profile(4, 16, 0.5, 0.5, rng);
  const NodeProfile b = gen_mismatch_profile(4, 16, 0.5, 0.5, rng);
  DuplexLink link = DuplexLink::make(a, b, gen_multipath_channel(4, 16, 16, rng), 1e-4);
  const auto cb = dft_codebook(16);

  const auto fwd = digital_calibration_search(link.forward, cb, cb, rng);
  const auto rev = digital_calibration_search(link.reverse, cb, cb, rng);
  if (link.forward.tx_counter != 4 || link.reverse.tx_counter != 4)
    return "digital step used " + std::to_string(link.forward.tx_counter) + "/" +
           std::to_string(link.reverse.tx_counter) + " pilots, expected 4/4";

  const auto est = analog_calibration(link, cb, cb, {fwd.t1_tx, rev.r1_rx}, {rev.t1_tx, fwd.r1_rx}, rng);
  if (link.forward.tx_counter != 4 + 64 || link.reverse.tx_counter != 4 + 64)
    return "analog step used " + std::to_string(link.forward.tx_counter - 4) + "/" +
           std::to_string(link.reverse.tx_counter - 4) + " pilots, expected 64/64";

  const auto before = link.forward.tx_counter + link.reverse.tx_counter;
  inter_ap_ratio(link, est.alpha_hat, est.alpha_hat_peer, cb.columns.col(0), cb.columns.col(0), rng);
  const auto third = link.forward.tx_counter + link.reverse.tx_counter - before;
  if (third != 2) return "inter-AP step used " + std::to_string(third) + " pilots, expected 2";

  for (int k : {1, 2, 4}) {
    SystemConfig cfg;
    cfg.num_aps = k;
    const auto m = run_trial(cfg, 0);
    if (m.pilots_total != pilot_budget(cfg))
      return "K=" + std::to_string(k) + " trial spent " + std::to_string(m.pilots_total) +
             " pilots, budget " + std::to_string(pilot_budget(cfg));
  }
  return {};
}

}  // namespace

bool run_selftest(std::ostream& out) {
  const std::vector<Check> checks = {
      {"planted two-step calibration", planted_pair},
      {"planted end-to-end trial", planted_trial},
      {"planted joint calibration", planted_joint},
      {"rank-1 solver vs alternating oracle", rank1_oracle},
      {"analog solver vs eigenvector oracle", analog_oracle},
      {"transmit vs dense chain oracle", chain_oracle},
      {"pilot budgets (4 / 64 / 2)", pilot_budgets},
  };
  bool all = true;
  for (const auto& c : checks) {
    std::string why;
    try {
      why = c.run();
    } catch (const std::exception& e) {
      why = std::string("threw: ") + e.what();
    }
    out << (why.empty() ? "ok   " : "FAIL ") << c.name;
    if (!why.empty()) out << ": " << why;
    out << '\n';
    all = all && why.empty();
  }
  return all;
}

}  // namespace recipcal::cli
