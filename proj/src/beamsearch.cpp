#include "recipcal/beamsearch.hpp"

#include <cmath>
#include <string>

namespace recipcal {

BeamPair best_beam_pair(const ObservationMatrix& obs) {
  if (obs.data.size() == 0) throw DimensionError("best_beam_pair: empty observation matrix");
  BeamPair best;
  double best_mag = -1.0;
  for (Eigen::Index i = 0; i < obs.data.cols(); ++i) {
    for (Eigen::Index j = 0; j < obs.data.rows(); ++j) {
      const double mag = std::abs(obs.data(j, i));
      if (mag > best_mag) {
        best_mag = mag;
        best = {static_cast<int>(i), static_cast<int>(j)};
      }
    }
  }
  return best;
}

std::vector<BeamPair> filter_pairs_by_snr(const ObservationMatrix& obs, double noise_variance,
                                          double threshold_db) {
  if (!(noise_variance > 0.0)) {
    throw Error("filter_pairs_by_snr: noise variance must be positive");
  }
  const double threshold = std::pow(10.0, threshold_db / 10.0);
  std::vector<BeamPair> out;
  for (Eigen::Index i = 0; i < obs.data.cols(); ++i) {
    for (Eigen::Index j = 0; j < obs.data.rows(); ++j) {
      if (std::norm(obs.data(j, i)) / noise_variance >= threshold) {
        out.push_back({static_cast<int>(i), static_cast<int>(j)});
      }
    }
  }
  return out;
}

BeamformerMatrix perturb_full_rank(const BeamformerMatrix& selected, double epsilon, Rng& rng,
                                   const PerturbOptions& options) {
  const int m = selected.antennas();
  const int c = selected.count();
  if (c < 1 || c > m) {
    throw DimensionError("perturb_full_rank: need between 1 and M selected beams, got " +
                         std::to_string(c));
  }
  if (!(epsilon > 0.0 && epsilon <= kPi)) {
    throw Error("perturb_full_rank: epsilon must lie in (0, pi]");
  }
  std::uniform_real_distribution<double> jitter(-epsilon, epsilon);
  CMatrix out(m, m);
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    for (int col = 0; col < m; ++col) {
      for (int row = 0; row < m; ++row) {
        out(row, col) = selected.columns(row, col % c) * std::polar(1.0, jitter(rng));
      }
    }
    if (condition_number(out) <= options.max_condition) {
      BeamformerMatrix b;
      b.columns = out;
      b.is_full_rank = true;
      return b;
    }
  }
  throw PerturbationError("perturb_full_rank: no well-conditioned set after " +
                          std::to_string(options.max_attempts) +
                          " attempts; try a larger epsilon");
}

}  // namespace recipcal
