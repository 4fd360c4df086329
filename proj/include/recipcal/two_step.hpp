#pragma once

#include <cstdint>

#include "recipcal/beamsearch.hpp"
#include "recipcal/calibration.hpp"

namespace recipcal {

/// Full two-step calibration between the two nodes of a DuplexLink.
struct PairCalibration {
  DigitalEstimates first;   // transmits on link.forward
  DigitalEstimates second;  // transmits on link.reverse
  CalibrationEstimate estimate;
  XZMatrices xz;
  ObservationMatrix forward_obs;
  ObservationMatrix reverse_obs;
  BeamPair forward_beams;  // strongest pair first -> second (indices into the beam sets)
  BeamPair reverse_beams;  // strongest pair second -> first
  std::uint64_t pilots_forward = 0;
  std::uint64_t pilots_reverse = 0;
};

/// Gathers the analog-step observations in both directions first, takes
/// the strongest beam pair of each direction for the digital step, then
/// solves for the analog ratios. Spends the same pilots as running the
/// digital step before the analog step.
PairCalibration calibrate_pair(DuplexLink& link, const BeamformerMatrix& first_beams,
                               const BeamformerMatrix& second_beams, Rng& rng);

}  // namespace recipcal
