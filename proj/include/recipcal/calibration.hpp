#pragma once

#include <cstdint>
#include <vector>

#include "recipcal/airlink.hpp"
#include "recipcal/model.hpp"

namespace recipcal {

/// Best rank-1 fit Y ~= left * right^T, both factors normalized to a unit
/// first element. `residual` is the squared Frobenius error of the fit.
struct Rank1Factors {
  CVector left;
  CVector right;
  double residual = 0.0;
};

Rank1Factors solve_rank1_ls(const CMatrix& y);

/// Normalized digital chain estimates held by one node.
struct DigitalEstimates {
  CVector t1;
  CVector r1;
};

/// Output of one digital calibration run over a single direction.
struct DigitalStepResult {
  CVector t1_tx;  // transmit chains of the sending node
  CVector r1_rx;  // receive chains of the receiving node
  double residual = 0.0;
  std::uint64_t pilots_used = 0;
};

/// Sends one pilot per transmit digital chain with fixed beams f1/b1 and
/// factors the stacked observations. Throws DegenerateChannelError when
/// the observations vanish (beam pair orthogonal to the channel).
DigitalStepResult digital_calibration(Link& link, const CVector& f1, const CVector& b1, Rng& rng);

/// digital_calibration over codebook column pairs 0, 1, ... until one pair
/// is not degenerate.
DigitalStepResult digital_calibration_search(Link& link, const BeamformerMatrix& tx_codebook,
                                             const BeamformerMatrix& rx_codebook, Rng& rng);

/// Runs the digital step in both directions of `link`.
struct DigitalPairResult {
  DigitalEstimates first;   // node transmitting on link.forward
  DigitalEstimates second;  // node transmitting on link.reverse
  std::uint64_t pilots_forward = 0;
  std::uint64_t pilots_reverse = 0;
};

DigitalPairResult digital_calibration_pair(DuplexLink& link, const BeamformerMatrix& first_codebook,
                                           const BeamformerMatrix& second_codebook, Rng& rng);

struct XZMatrices {
  CMatrix x;  // from the forward observations
  CMatrix z;  // from the reverse observations
};

/// Maximum condition number accepted for the probing beam sets.
inline constexpr double kMaxBeamCondition = 1e6;

/// forward: node S sends with beams F, peer S' receives with beams B.
/// reverse: S' sends with B, S receives with F. `r1_self` / `r1_peer` are
/// the normalized receive digital estimates of S and S'; they scale the
/// stacked receive beams.
XZMatrices build_xz(const ObservationMatrix& forward, const ObservationMatrix& reverse,
                    const CMatrix& tx_beams, const CMatrix& peer_beams, const CVector& r1_self,
                    const CVector& r1_peer);

struct AnalogSolution {
  CVector alpha;       // transmitting node, alpha[0] = 1
  CVector alpha_peer;  // receiving node, alpha_peer[0] = 1
  double residual = 0.0;
  /// Second smallest singular value of the coefficient matrix divided by
  /// the largest. Near zero means the solution is not unique up to scale.
  double uniqueness_gap = 0.0;
  bool ambiguous = false;
  CVector null_vector;  // unit-norm [alpha; alpha_peer] before normalization
};

/// Minimizes sum_ij |x_ij a_j - z_ij a'_i|^2 over unit-norm (a, a').
AnalogSolution solve_analog_ls(const CMatrix& x, const CMatrix& z);

/// Analog and digital estimates for one node pair. Vectors are normalized
/// to a unit first element.
struct CalibrationEstimate {
  CVector t1_hat;
  CVector r1_hat_peer;
  CVector alpha_hat;
  CVector alpha_hat_peer;
  double residual = 0.0;
  bool ambiguous = false;
  std::uint64_t pilots_forward = 0;
  std::uint64_t pilots_reverse = 0;
};

CalibrationEstimate analog_calibration(DuplexLink& link, const BeamformerMatrix& tx_beams,
                                       const BeamformerMatrix& peer_beams,
                                       const DigitalEstimates& self, const DigitalEstimates& peer,
                                       Rng& rng);

enum class TandemKind { kReceive, kTransmit };

/// Receive: alpha .* beam. Transmit: beam ./ alpha.
CVector reciprocal_tandem(const CVector& beam, const CVector& alpha, TandemKind kind);

struct InterApRatio {
  cd c_hat;
  cd y_forward;
  cd y_reverse;
};

/// Two-pilot exchange between AP1 (link.forward transmitter) and AP2.
/// AP1 sends with f11 and AP2 listens with b21; AP2 then answers with the
/// receive tandem of b21 while AP1 listens with the transmit tandem of f11.
/// The alphas are normalized internally.
InterApRatio inter_ap_ratio(DuplexLink& link, const CVector& alpha_ap1, const CVector& alpha_ap2,
                            const CVector& f11, const CVector& b21, Rng& rng);

struct JointEstimate {
  CVector alpha;   // node 1
  CVector alpha2;  // node 2
  CVector alpha3;  // node 3
  double residual = 0.0;
  bool ambiguous = false;
  std::uint64_t pilots_used = 0;
};

/// The same system written from the peer's side: X' = Z^T, Z' = X^T, so
/// the peer's ratios become the shared (column) unknowns.
XZMatrices swap_roles(const XZMatrices& xz);

struct StarEstimate {
  CVector center;              // shared node, center[0] = 1
  std::vector<CVector> peers;  // one per system, each [0] = 1
  double residual = 0.0;
  bool ambiguous = false;
};

/// Solves several (X, Z) systems that share the column unknowns (one
/// center node calibrated against several peers) as one homogeneous least
/// squares problem. Every coefficient row has two nonzeros, so the Gram
/// matrix is formed directly and its smallest eigenvector taken.
StarEstimate solve_star_analog_ls(const std::vector<XZMatrices>& systems);

/// Stacks the (X, Z) systems of links 1<->2 and 1<->3 that share node 1's
/// ratios and solves them together.
JointEstimate solve_joint_analog_ls(const XZMatrices& link12, const XZMatrices& link13);

/// Node 1 broadcasts through its beams F while nodes 2 and 3 listen, then
/// nodes 2 and 3 answer in turn. The broadcast counts once in pilots_used.
JointEstimate joint_analog_calibration(DuplexLink& link12, DuplexLink& link13,
                                       const BeamformerMatrix& node1_beams,
                                       const BeamformerMatrix& node2_beams,
                                       const BeamformerMatrix& node3_beams,
                                       const DigitalEstimates& node1, const DigitalEstimates& node2,
                                       const DigitalEstimates& node3, Rng& rng);

}  // namespace recipcal
