#pragma once

#include <vector>

#include "recipcal/airlink.hpp"
#include "recipcal/model.hpp"

namespace recipcal {

struct EffectiveChannel {
  CMatrix matrix;
  Direction direction = Direction::kUplink;
  bool known_up_to_scale = true;
  int ap_id = 0;
};

/// Turns an uplink observation (rows: AP receive beams, columns: MU
/// transmit beams) into the AP-antennas x MU-antennas effective uplink
/// channel, up to one complex scale. `r1_ap` scales the stacked AP receive
/// beams; pass ones to ignore the digital chains.
EffectiveChannel ul_effective_from_observation(const ObservationMatrix& obs, const CMatrix& ap_beams,
                                               const CMatrix& mu_beams, const CVector& r1_ap,
                                               int ap_id = 0);

struct UplinkEstimate {
  EffectiveChannel channel;
  ObservationMatrix observation;
};

/// Runs the uplink pilot schedule on `uplink` (MU -> AP) and returns the
/// effective uplink channel estimate together with the raw observations.
UplinkEstimate estimate_ul_effective(Link& uplink, const BeamformerMatrix& ap_beams,
                                     const BeamformerMatrix& mu_beams, const CVector& r1_ap,
                                     Rng& rng, int ap_id = 0);

/// diag(alpha_mu) * UL^T * diag(alpha_ap)^-1.
EffectiveChannel dl_from_ul(const EffectiveChannel& ul, const CVector& alpha_ap,
                            const CVector& alpha_mu);

/// Stacks per-AP downlink blocks (rows: user antennas, columns: AP
/// antennas) into one (sum of AP antennas) x (user antennas) matrix, each
/// block divided by its ratio to the reference AP (ratios[0] must be 1).
CMatrix assemble_multi_ap(const std::vector<EffectiveChannel>& dl_list,
                          const std::vector<cd>& ratios);

}  // namespace recipcal
