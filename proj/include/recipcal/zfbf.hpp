#pragma once

#include <vector>

#include "recipcal/types.hpp"

namespace recipcal {

struct PrecodingSetup {
  CMatrix w;       // (antennas) x (users), unit-norm columns
  RVector powers;  // per-user power
  double noise_variance = 0.0;
};

struct ZfPrecoder {
  CMatrix w;             // columns scaled to unit norm, first entry real >= 0
  CMatrix w_unnormalized;  // H (H^T H)^{-1}
};

/// Largest condition number of H^T H accepted by zf_precoder.
inline constexpr double kMaxGramCondition = 1e8;

/// Zero-forcing precoder for a channel with users as columns; the
/// received signal is H^T W s. Throws RankDeficiencyError when H^T H is
/// (nearly) singular.
ZfPrecoder zf_precoder(const CMatrix& h_hat);

/// SINR_u = P_u |h_u^T w_u|^2 / (sum_{v != u} P_v |h_u^T w_v|^2 + sigma^2).
RVector sinr_per_user(const CMatrix& h_true, const PrecodingSetup& setup);

/// Sum of log2(1 + SINR_u), bits/s/Hz.
double sum_rate(const RVector& sinrs);

/// Equal split of `total_power` across `users`.
RVector equal_power(int users, double total_power);

}  // namespace recipcal
