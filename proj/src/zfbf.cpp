#include "recipcal/zfbf.hpp"

#include <cmath>
#include <string>

namespace recipcal {

ZfPrecoder zf_precoder(const CMatrix& h_hat) {
  if (h_hat.rows() < h_hat.cols()) {
    throw RankDeficiencyError("zf_precoder: fewer antennas (" + std::to_string(h_hat.rows()) +
                              ") than users (" + std::to_string(h_hat.cols()) + ")");
  }
  const CMatrix gram = h_hat.transpose() * h_hat;
  const double cond = condition_number(gram);
  if (!(cond < kMaxGramCondition)) {
    throw RankDeficiencyError("zf_precoder: H^T H is singular (condition number " +
                              std::to_string(cond) + ")");
  }
  ZfPrecoder out;
  // W^T = (H^T H)^{-T} H^T; the Gram matrix is symmetric, so W = H G^{-1}.
  out.w_unnormalized = h_hat * gram.fullPivLu().inverse();
  out.w = out.w_unnormalized;
  for (Eigen::Index u = 0; u < out.w.cols(); ++u) {
    auto col = out.w.col(u);
    const double n = col.norm();
    cd phase{1.0, 0.0};
    Eigen::Index ref = 0;
    for (; ref < col.size(); ++ref) {
      if (std::abs(col(ref)) > 1e-12 * n) {
        phase = std::conj(col(ref)) / std::abs(col(ref));
        break;
      }
    }
    col *= phase / n;
    if (ref < col.size()) col(ref) = std::abs(col(ref));  // drop the rounding residue
  }
  return out;
}

RVector sinr_per_user(const CMatrix& h_true, const PrecodingSetup& setup) {
  if (h_true.rows() != setup.w.rows() || h_true.cols() != setup.w.cols() ||
      setup.powers.size() != h_true.cols()) {
    throw DimensionError("sinr_per_user: channel, precoder and power dimensions disagree");
  }
  const CMatrix g = h_true.transpose() * setup.w;  // g(u, v) = h_u^T w_v
  const auto users = g.rows();
  RVector sinr(users);
  for (Eigen::Index u = 0; u < users; ++u) {
    double interference = 0.0;
    for (Eigen::Index v = 0; v < users; ++v) {
      if (v != u) interference += setup.powers(v) * std::norm(g(u, v));
    }
    sinr(u) = setup.powers(u) * std::norm(g(u, u)) / (interference + setup.noise_variance);
  }
  return sinr;
}

double sum_rate(const RVector& sinrs) {
  double r = 0.0;
  for (Eigen::Index u = 0; u < sinrs.size(); ++u) {
    if (!(sinrs(u) >= 0.0)) throw Error("sum_rate: SINR must be non-negative");
    r += std::log2(1.0 + sinrs(u));
  }
  return r;
}

RVector equal_power(int users, double total_power) {
  return RVector::Constant(users, total_power / users);
}

}  // namespace recipcal
