#include "recipcal/estimation.hpp"

#include <cmath>
#include <string>

#include "recipcal/calibration.hpp"

namespace recipcal {

EffectiveChannel ul_effective_from_observation(const ObservationMatrix& obs, const CMatrix& ap_beams,
                                               const CMatrix& mu_beams, const CVector& r1_ap,
                                               int ap_id) {
  if (ap_beams.rows() != ap_beams.cols() || mu_beams.rows() != mu_beams.cols()) {
    throw DimensionError("estimate_ul_effective: beam sets must be square");
  }
  if (obs.data.rows() != ap_beams.rows() || obs.data.cols() != mu_beams.rows()) {
    throw DimensionError("estimate_ul_effective: observation shape does not match the beam sets");
  }
  for (const auto* beams : {&ap_beams, &mu_beams}) {
    const double cond = condition_number(*beams);
    if (!(cond <= kMaxBeamCondition)) {
      throw ConditioningError("estimate_ul_effective: beam set is ill-conditioned (condition number " +
                              std::to_string(cond) + ")");
    }
  }
  const CVector ratio = normalize_first(r1_ap);
  CMatrix ap_tilde = ap_beams;
  for (Eigen::Index m = 0; m < ap_tilde.cols(); ++m) ap_tilde.col(m) *= ratio(m % ratio.size());

  // (F~^T)^{-1} Y B^{-1}
  const CMatrix left = ap_tilde.transpose().fullPivLu().solve(obs.data);
  EffectiveChannel ch;
  ch.matrix = mu_beams.transpose().fullPivLu().solve(left.transpose()).transpose();
  ch.direction = Direction::kUplink;
  ch.known_up_to_scale = true;
  ch.ap_id = ap_id;
  return ch;
}

UplinkEstimate estimate_ul_effective(Link& uplink, const BeamformerMatrix& ap_beams,
                                     const BeamformerMatrix& mu_beams, const CVector& r1_ap,
                                     Rng& rng, int ap_id) {
  if (ap_beams.antennas() != uplink.rx_antennas() || mu_beams.antennas() != uplink.tx_antennas()) {
    throw DimensionError("estimate_ul_effective: beam sets do not match the link");
  }
  UplinkEstimate out;
  out.observation = gather_observations(
      uplink, mu_beams.columns,
      make_receive_groups(ap_beams.columns, uplink.rx_profile.digital_chains()), kPilot, rng,
      Direction::kUplink);
  out.channel = ul_effective_from_observation(out.observation, ap_beams.columns, mu_beams.columns,
                                              r1_ap, ap_id);
  return out;
}

EffectiveChannel dl_from_ul(const EffectiveChannel& ul, const CVector& alpha_ap,
                            const CVector& alpha_mu) {
  if (alpha_ap.size() != ul.matrix.rows() || alpha_mu.size() != ul.matrix.cols()) {
    throw DimensionError("dl_from_ul: alpha lengths do not match the channel");
  }
  for (const auto* a : {&alpha_ap, &alpha_mu}) {
    for (Eigen::Index i = 0; i < a->size(); ++i) {
      if ((*a)(i) == cd{0.0, 0.0}) throw NormalizationError("dl_from_ul: zero alpha entry");
    }
  }
  EffectiveChannel dl;
  dl.matrix = alpha_mu.asDiagonal() * ul.matrix.transpose() *
              alpha_ap.cwiseInverse().asDiagonal();
  dl.direction = Direction::kDownlink;
  dl.known_up_to_scale = true;
  dl.ap_id = ul.ap_id;
  return dl;
}

CMatrix assemble_multi_ap(const std::vector<EffectiveChannel>& dl_list,
                          const std::vector<cd>& ratios) {
  if (dl_list.empty()) throw DimensionError("assemble_multi_ap: no AP blocks");
  if (ratios.size() != dl_list.size()) {
    throw DimensionError("assemble_multi_ap: one ratio per AP block is required");
  }
  if (std::abs(ratios[0] - cd{1.0, 0.0}) > 1e-12) {
    throw Error("assemble_multi_ap: the reference AP ratio must be 1");
  }
  const auto users = dl_list[0].matrix.rows();
  Eigen::Index rows = 0;
  for (const auto& dl : dl_list) {
    if (dl.matrix.rows() != users) {
      throw DimensionError("assemble_multi_ap: AP blocks disagree on the user dimension");
    }
    rows += dl.matrix.cols();
  }
  CMatrix out(rows, users);
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < dl_list.size(); ++k) {
    if (ratios[k] == cd{0.0, 0.0}) throw NormalizationError("assemble_multi_ap: zero ratio");
    const auto& block = dl_list[k].matrix;
    out.middleRows(offset, block.cols()) = block.transpose() / ratios[k];
    offset += block.cols();
  }
  return out;
}

}  // namespace recipcal
