#pragma once

#include <vector>

#include "recipcal/airlink.hpp"
#include "recipcal/model.hpp"

namespace recipcal {

struct BeamPair {
  int tx = 0;
  int rx = 0;
  friend bool operator==(const BeamPair&, const BeamPair&) = default;
};

/// Strongest entry of a forward observation matrix (rows: receive beams,
/// columns: transmit beams). Ties go to the smallest (tx, rx).
BeamPair best_beam_pair(const ObservationMatrix& obs);

/// Pairs with |Y[rx, tx]|^2 / noise_variance >= 10^(threshold_db / 10),
/// ordered by (tx, rx).
std::vector<BeamPair> filter_pairs_by_snr(const ObservationMatrix& obs, double noise_variance,
                                          double threshold_db);

struct PerturbOptions {
  double max_condition = 1e3;
  int max_attempts = 32;
};

/// Cycles the selected beams out to M columns and jitters every phase
/// uniformly in (-epsilon, epsilon) until the set is well conditioned.
BeamformerMatrix perturb_full_rank(const BeamformerMatrix& selected, double epsilon, Rng& rng,
                                   const PerturbOptions& options = {});

}  // namespace recipcal
