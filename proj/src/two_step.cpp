#include "recipcal/two_step.hpp"

namespace recipcal {

PairCalibration calibrate_pair(DuplexLink& link, const BeamformerMatrix& first_beams,
                               const BeamformerMatrix& second_beams, Rng& rng) {
  // build_xz checks the conditioning; shapes are checked before any pilot is spent.
  for (const auto* b : {&first_beams, &second_beams}) {
    if (b->columns.rows() != b->columns.cols()) {
      throw DimensionError("calibrate_pair: beam sets must be square");
    }
  }
  const std::uint64_t fwd_before = link.forward.tx_counter;
  const std::uint64_t rev_before = link.reverse.tx_counter;

  PairCalibration out;
  out.forward_obs = gather_observations(
      link.forward, first_beams.columns,
      make_receive_groups(second_beams.columns, link.forward.rx_profile.digital_chains()), kPilot,
      rng, Direction::kDownlink);
  out.reverse_obs = gather_observations(
      link.reverse, second_beams.columns,
      make_receive_groups(first_beams.columns, link.reverse.rx_profile.digital_chains()), kPilot,
      rng, Direction::kUplink);
  out.forward_beams = best_beam_pair(out.forward_obs);
  out.reverse_beams = best_beam_pair(out.reverse_obs);

  const DigitalStepResult fwd =
      digital_calibration(link.forward, first_beams.columns.col(out.forward_beams.tx),
                          second_beams.columns.col(out.forward_beams.rx), rng);
  const DigitalStepResult rev =
      digital_calibration(link.reverse, second_beams.columns.col(out.reverse_beams.tx),
                          first_beams.columns.col(out.reverse_beams.rx), rng);
  out.first = {fwd.t1_tx, rev.r1_rx};
  out.second = {rev.t1_tx, fwd.r1_rx};

  out.xz = build_xz(out.forward_obs, out.reverse_obs, first_beams.columns,
                    second_beams.columns, out.first.r1, out.second.r1);
  // Same minimizer as solve_analog_ls, through the (M + M') x (M + M') Gram matrix.
  const StarEstimate sol = solve_star_analog_ls({out.xz});
  out.estimate.t1_hat = out.first.t1;
  out.estimate.r1_hat_peer = out.second.r1;
  out.estimate.alpha_hat = sol.center;
  out.estimate.alpha_hat_peer = sol.peers.front();
  out.estimate.residual = sol.residual;
  out.estimate.ambiguous = sol.ambiguous;
  out.pilots_forward = link.forward.tx_counter - fwd_before;
  out.pilots_reverse = link.reverse.tx_counter - rev_before;
  out.estimate.pilots_forward = out.pilots_forward;
  out.estimate.pilots_reverse = out.pilots_reverse;
  return out;
}

}  // namespace recipcal
