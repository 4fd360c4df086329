#pragma once

#include <cstdint>
#include <vector>

#include "recipcal/model.hpp"

namespace recipcal {

enum class Direction { kDownlink, kUplink };

/// One direction of a TDD link. `channel` is oriented tx -> rx.
struct Link {
  NodeProfile tx_profile;
  NodeProfile rx_profile;
  MultipathChannel channel;
  double noise_variance = 0.0;
  std::uint64_t tx_counter = 0;

  int tx_antennas() const { return tx_profile.antennas(); }
  int rx_antennas() const { return rx_profile.antennas(); }

  /// Opposite direction over the same medium: channel transposed, roles of
  /// the profiles swapped, fresh counter.
  Link reversed() const;
};

/// Both directions between two nodes. `forward` runs first -> second.
struct DuplexLink {
  Link forward;
  Link reverse;

  static DuplexLink make(const NodeProfile& first, const NodeProfile& second,
                         const MultipathChannel& first_to_second, double noise_variance);
};

/// Pilot symbol used by every calibration exchange.
inline const cd kPilot{1.0, 0.0};

struct ObservationMatrix {
  CMatrix data;  // rows: receive beams, columns: transmit beams
  std::uint64_t pilots_used = 0;
  Direction direction = Direction::kDownlink;
};

/// One transmission through the hybrid chain:
///   y = R1rx B^T R2rx H T2tx F T1tx x + z,  z ~ CN(0, sigma^2 I).
/// F has one column per transmit digital chain, B one column per receive
/// digital chain. Noise is drawn only when sigma^2 > 0.
CVector transmit(Link& link, const CMatrix& tx_beams, const CVector& tx_digital,
                 const CMatrix& rx_beams, Rng& rng);

/// Transmits `pilot` on chain 0 through `tx_beam` and returns what receive
/// chain 0 sees through `rx_beam`. One pilot.
cd transmit_first_chain(Link& link, const CVector& tx_beam, const CVector& rx_beam, cd pilot,
                        Rng& rng);

/// Splits the receive beams into ceil(M/N) groups of width N, padding the
/// last group with the first beam.
std::vector<CMatrix> make_receive_groups(const CMatrix& rx_beams, int digital_chains);

/// For every transmit beam i and receive group k, sends `pilot` on tx chain
/// 0 with beam i and stores chain j's output at row k*N + j, column i.
/// Padding rows are dropped. Uses tx_beams.cols() * groups.size() pilots.
ObservationMatrix gather_observations(Link& link, const CMatrix& tx_beams,
                                      const std::vector<CMatrix>& rx_groups, cd pilot, Rng& rng,
                                      Direction direction = Direction::kDownlink);

/// Pilots consumed by gather_observations for these sizes.
constexpr std::uint64_t observation_pilots(int tx_beams, int rx_antennas, int rx_chains) {
  return static_cast<std::uint64_t>(tx_beams) *
         static_cast<std::uint64_t>((rx_antennas + rx_chains - 1) / rx_chains);
}

}  // namespace recipcal
