#include "recipcal/calibration.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

namespace recipcal {

namespace {

constexpr double kNormTol = 1e-12;
constexpr double kDegenerateNorm = 1e-10;
constexpr double kAmbiguityGap = 1e-10;

void require_beams(const BeamformerMatrix& b, const char* name) {
  if (b.columns.rows() != b.columns.cols()) {
    throw DimensionError(std::string(name) + " must be square");
  }
  const double cond = condition_number(b.columns);
  if (!(cond <= kMaxBeamCondition)) {
    throw ConditioningError(std::string(name) + " is ill-conditioned (condition number " +
                            std::to_string(cond) + ")");
  }
}

/// Column m of `beams` scaled by r1[m mod N] / r1[0].
CMatrix stacked_receive_beams(const CMatrix& beams, const CVector& r1) {
  const CVector ratio = normalize_first(r1);
  const auto n = ratio.size();
  CMatrix out = beams;
  for (Eigen::Index m = 0; m < out.cols(); ++m) out.col(m) *= ratio(m % n);
  return out;
}

/// Smallest right singular vector of `a`, padded with zero singular values
/// when `a` is wide.
struct NullVector {
  CVector v;
  double residual = 0.0;
  double gap = 0.0;
};

NullVector smallest_right_singular(const CMatrix& a) {
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeFullV);
  const auto cols = a.cols();
  RVector s = RVector::Zero(cols);
  const auto& sv = svd.singularValues();
  s.head(sv.size()) = sv;
  NullVector out;
  out.v = svd.matrixV().col(cols - 1);
  out.residual = s(cols - 1) * s(cols - 1);
  out.gap = cols >= 2 && s(0) > 0.0 ? s(cols - 2) / s(0) : 0.0;
  return out;
}

void check_first(const CVector& block, const char* name) {
  if (std::abs(block(0)) < kNormTol * std::max(block.norm(), 1e-300)) {
    throw NormalizationError(std::string(name) + ": first element vanished in the solution");
  }
}

}  // namespace

Rank1Factors solve_rank1_ls(const CMatrix& y) {
  if (y.size() == 0) throw DimensionError("solve_rank1_ls: empty observation matrix");
  const double norm = y.norm();
  if (norm == 0.0) throw NormalizationError("solve_rank1_ls: observation matrix is zero");
  Eigen::JacobiSVD<CMatrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s1 = svd.singularValues()(0);
  const CVector u = svd.matrixU().col(0);
  const CVector v = svd.matrixV().col(0).conjugate();
  // u and v have unit norm, so the tolerance is relative to ||Y||.
  if (std::abs(u(0)) < kNormTol || std::abs(v(0)) < kNormTol) {
    throw NormalizationError("solve_rank1_ls: leading factor element is numerically zero");
  }
  Rank1Factors out;
  out.left = u / u(0);
  out.right = v / v(0);
  out.residual = std::max(0.0, norm * norm - s1 * s1);
  return out;
}

DigitalStepResult digital_calibration(Link& link, const CVector& f1, const CVector& b1, Rng& rng) {
  const int ntx = link.tx_profile.digital_chains();
  const int nrx = link.rx_profile.digital_chains();
  const CMatrix tx_beams = f1.replicate(1, ntx);
  const CMatrix rx_beams = b1.replicate(1, nrx);
  const std::uint64_t before = link.tx_counter;

  CMatrix y(nrx, ntx);
  for (int i = 0; i < ntx; ++i) {
    CVector x = CVector::Zero(ntx);
    x(i) = kPilot;
    y.col(i) = transmit(link, tx_beams, x, rx_beams, rng);
  }
  if (y.norm() < kDegenerateNorm) {
    throw DegenerateChannelError("digital_calibration: beam pair is orthogonal to the channel");
  }
  const Rank1Factors f = solve_rank1_ls(y);
  DigitalStepResult out;
  out.r1_rx = f.left;
  out.t1_tx = f.right;
  out.residual = f.residual;
  out.pilots_used = link.tx_counter - before;
  return out;
}

DigitalStepResult digital_calibration_search(Link& link, const BeamformerMatrix& tx_codebook,
                                             const BeamformerMatrix& rx_codebook, Rng& rng) {
  const int attempts = std::max(tx_codebook.count(), rx_codebook.count());
  const std::uint64_t before = link.tx_counter;
  for (int c = 0; c < attempts; ++c) {
    try {
      DigitalStepResult r = digital_calibration(link, tx_codebook.columns.col(c % tx_codebook.count()),
                                                rx_codebook.columns.col(c % rx_codebook.count()), rng);
      r.pilots_used = link.tx_counter - before;
      return r;
    } catch (const DegenerateChannelError&) {
    }
  }
  throw DegenerateChannelError("digital_calibration: every codebook pair is orthogonal to the channel");
}

DigitalPairResult digital_calibration_pair(DuplexLink& link, const BeamformerMatrix& first_codebook,
                                           const BeamformerMatrix& second_codebook, Rng& rng) {
  const DigitalStepResult fwd = digital_calibration_search(link.forward, first_codebook, second_codebook, rng);
  const DigitalStepResult rev = digital_calibration_search(link.reverse, second_codebook, first_codebook, rng);
  DigitalPairResult out;
  out.first = {fwd.t1_tx, rev.r1_rx};
  out.second = {rev.t1_tx, fwd.r1_rx};
  out.pilots_forward = fwd.pilots_used;
  out.pilots_reverse = rev.pilots_used;
  return out;
}

XZMatrices build_xz(const ObservationMatrix& forward, const ObservationMatrix& reverse,
                    const CMatrix& tx_beams, const CMatrix& peer_beams, const CVector& r1_self,
                    const CVector& r1_peer) {
  const auto m = tx_beams.rows();
  const auto mp = peer_beams.rows();
  if (tx_beams.cols() != m || peer_beams.cols() != mp) {
    throw DimensionError("build_xz: beam matrices must be square");
  }
  if (forward.data.rows() != mp || forward.data.cols() != m || reverse.data.rows() != m ||
      reverse.data.cols() != mp) {
    throw DimensionError("build_xz: observation shapes do not match the beam sets");
  }
  for (const auto* beams : {&tx_beams, &peer_beams}) {
    const double cond = condition_number(*beams);
    if (!(cond <= kMaxBeamCondition)) {
      throw ConditioningError("build_xz: beam set is ill-conditioned (condition number " +
                              std::to_string(cond) + ")");
    }
  }
  const CMatrix peer_tilde = stacked_receive_beams(peer_beams, r1_peer);
  const CMatrix self_tilde = stacked_receive_beams(tx_beams, r1_self);

  // X = B~^{-T} Y' F^{-1},  Z = B^{-T} Y^T F~^{-1}
  XZMatrices out;
  const CMatrix left_x = peer_tilde.transpose().partialPivLu().solve(forward.data);
  out.x = tx_beams.transpose().partialPivLu().solve(left_x.transpose()).transpose();
  const CMatrix left_z = peer_beams.transpose().partialPivLu().solve(reverse.data.transpose());
  out.z = self_tilde.transpose().partialPivLu().solve(left_z.transpose()).transpose();
  return out;
}

namespace {

/// Rows of the homogeneous system for one (X, Z) pair. Unknowns are laid out
/// as [shared (cols of X) | peer block starting at `peer_offset`].
void append_rows(CMatrix& a, Eigen::Index& row, const XZMatrices& xz, Eigen::Index peer_offset) {
  for (Eigen::Index i = 0; i < xz.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < xz.x.cols(); ++j) {
      a(row, j) = xz.x(i, j);
      a(row, peer_offset + i) = -xz.z(i, j);
      ++row;
    }
  }
}

void require_same_shape(const XZMatrices& xz, const char* name) {
  if (xz.x.rows() != xz.z.rows() || xz.x.cols() != xz.z.cols() || xz.x.size() == 0) {
    throw DimensionError(std::string(name) + ": X and Z must be nonempty and of equal shape");
  }
  if (xz.x.norm() == 0.0 && xz.z.norm() == 0.0) {
    throw NormalizationError(std::string(name) + ": X and Z are both zero");
  }
}

}  // namespace

AnalogSolution solve_analog_ls(const CMatrix& x, const CMatrix& z) {
  const XZMatrices xz{x, z};
  require_same_shape(xz, "solve_analog_ls");
  const auto mtx = x.cols();
  const auto mrx = x.rows();
  CMatrix a = CMatrix::Zero(mrx * mtx, mtx + mrx);
  Eigen::Index row = 0;
  append_rows(a, row, xz, mtx);

  const NullVector nv = smallest_right_singular(a);
  const CVector alpha = nv.v.head(mtx);
  const CVector peer = nv.v.tail(mrx);
  check_first(alpha, "solve_analog_ls alpha");
  check_first(peer, "solve_analog_ls alpha_peer");

  AnalogSolution out;
  out.alpha = alpha / alpha(0);
  out.alpha_peer = peer / peer(0);
  out.residual = nv.residual;
  out.uniqueness_gap = nv.gap;
  out.ambiguous = nv.gap <= kAmbiguityGap;
  out.null_vector = nv.v;
  return out;
}

CalibrationEstimate analog_calibration(DuplexLink& link, const BeamformerMatrix& tx_beams,
                                       const BeamformerMatrix& peer_beams,
                                       const DigitalEstimates& self, const DigitalEstimates& peer,
                                       Rng& rng) {
  require_beams(tx_beams, "analog_calibration: transmit beam set");
  require_beams(peer_beams, "analog_calibration: peer beam set");
  const std::uint64_t fwd_before = link.forward.tx_counter;
  const std::uint64_t rev_before = link.reverse.tx_counter;

  const ObservationMatrix forward = gather_observations(
      link.forward, tx_beams.columns,
      make_receive_groups(peer_beams.columns, link.forward.rx_profile.digital_chains()), kPilot,
      rng, Direction::kDownlink);
  const ObservationMatrix reverse = gather_observations(
      link.reverse, peer_beams.columns,
      make_receive_groups(tx_beams.columns, link.reverse.rx_profile.digital_chains()), kPilot, rng,
      Direction::kUplink);

  const XZMatrices xz =
      build_xz(forward, reverse, tx_beams.columns, peer_beams.columns, self.r1, peer.r1);
  const AnalogSolution sol = solve_analog_ls(xz.x, xz.z);

  CalibrationEstimate est;
  est.t1_hat = normalize_first(self.t1);
  est.r1_hat_peer = normalize_first(peer.r1);
  est.alpha_hat = sol.alpha;
  est.alpha_hat_peer = sol.alpha_peer;
  est.residual = sol.residual;
  est.ambiguous = sol.ambiguous;
  est.pilots_forward = link.forward.tx_counter - fwd_before;
  est.pilots_reverse = link.reverse.tx_counter - rev_before;
  return est;
}

CVector reciprocal_tandem(const CVector& beam, const CVector& alpha, TandemKind kind) {
  if (beam.size() != alpha.size()) {
    throw DimensionError("reciprocal_tandem: beam and alpha lengths differ");
  }
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha(i) == cd{0.0, 0.0}) {
      throw NormalizationError("reciprocal_tandem: alpha entry " + std::to_string(i) + " is zero");
    }
  }
  return kind == TandemKind::kReceive ? CVector(alpha.cwiseProduct(beam))
                                      : CVector(beam.cwiseQuotient(alpha));
}

InterApRatio inter_ap_ratio(DuplexLink& link, const CVector& alpha_ap1, const CVector& alpha_ap2,
                            const CVector& f11, const CVector& b21, Rng& rng) {
  const CVector a1 = normalize_first(alpha_ap1);
  const CVector a2 = normalize_first(alpha_ap2);
  InterApRatio out;
  out.y_forward = transmit_first_chain(link.forward, f11, b21, kPilot, rng);
  const CVector b22 = reciprocal_tandem(b21, a2, TandemKind::kReceive);
  const CVector f12 = reciprocal_tandem(f11, a1, TandemKind::kTransmit);
  out.y_reverse = transmit_first_chain(link.reverse, b22, f12, kPilot, rng);
  if (!(std::abs(out.y_reverse) >= 1e-12 * std::abs(out.y_forward)) ||
      out.y_reverse == cd{0.0, 0.0}) {
    throw DegenerateChannelError("inter_ap_ratio: reverse observation vanished");
  }
  out.c_hat = out.y_forward / out.y_reverse;
  return out;
}

XZMatrices swap_roles(const XZMatrices& xz) { return {xz.z.transpose(), xz.x.transpose()}; }

StarEstimate solve_star_analog_ls(const std::vector<XZMatrices>& systems) {
  if (systems.empty()) throw DimensionError("solve_star_analog_ls: no systems given");
  const auto m = systems.front().x.cols();
  Eigen::Index cols = m;
  for (const auto& xz : systems) {
    require_same_shape(xz, "solve_star_analog_ls");
    if (xz.x.cols() != m) {
      throw DimensionError("solve_star_analog_ls: systems disagree on the shared antenna count");
    }
    cols += xz.x.rows();
  }
  // Row (i, j) of a system reads x_ij at center j and -z_ij at peer i.
  CMatrix gram = CMatrix::Zero(cols, cols);
  Eigen::Index offset = m;
  for (const auto& xz : systems) {
    for (Eigen::Index i = 0; i < xz.x.rows(); ++i) {
      const Eigen::Index p = offset + i;
      for (Eigen::Index j = 0; j < m; ++j) {
        gram(j, j) += std::norm(xz.x(i, j));
        gram(p, p) += std::norm(xz.z(i, j));
        gram(j, p) -= std::conj(xz.x(i, j)) * xz.z(i, j);
      }
    }
    offset += xz.x.rows();
  }
  gram.triangularView<Eigen::StrictlyLower>() = gram.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
  const RVector& lambda = eig.eigenvalues();

  StarEstimate out;
  const CVector v = eig.eigenvectors().col(0);
  const CVector center = v.head(m);
  check_first(center, "star center");
  out.center = center / center(0);
  offset = m;
  for (const auto& xz : systems) {
    const CVector peer = v.segment(offset, xz.x.rows());
    check_first(peer, "star peer");
    out.peers.push_back(peer / peer(0));
    offset += xz.x.rows();
  }
  out.residual = std::max(0.0, lambda(0));
  const double top = lambda(cols - 1);
  out.ambiguous = cols < 2 || top <= 0.0 ||
                  std::sqrt(std::max(0.0, lambda(1)) / top) <= kAmbiguityGap;
  return out;
}

JointEstimate solve_joint_analog_ls(const XZMatrices& link12, const XZMatrices& link13) {
  const StarEstimate star = solve_star_analog_ls({link12, link13});
  JointEstimate out;
  out.alpha = star.center;
  out.alpha2 = star.peers[0];
  out.alpha3 = star.peers[1];
  out.residual = star.residual;
  out.ambiguous = star.ambiguous;
  return out;
}

JointEstimate joint_analog_calibration(DuplexLink& link12, DuplexLink& link13,
                                       const BeamformerMatrix& node1_beams,
                                       const BeamformerMatrix& node2_beams,
                                       const BeamformerMatrix& node3_beams,
                                       const DigitalEstimates& node1, const DigitalEstimates& node2,
                                       const DigitalEstimates& node3, Rng& rng) {
  require_beams(node1_beams, "joint_analog_calibration: node 1 beam set");
  require_beams(node2_beams, "joint_analog_calibration: node 2 beam set");
  require_beams(node3_beams, "joint_analog_calibration: node 3 beam set");

  const ObservationMatrix down2 = gather_observations(
      link12.forward, node1_beams.columns,
      make_receive_groups(node2_beams.columns, link12.forward.rx_profile.digital_chains()), kPilot,
      rng, Direction::kDownlink);
  const ObservationMatrix down3 = gather_observations(
      link13.forward, node1_beams.columns,
      make_receive_groups(node3_beams.columns, link13.forward.rx_profile.digital_chains()), kPilot,
      rng, Direction::kDownlink);
  const ObservationMatrix up2 = gather_observations(
      link12.reverse, node2_beams.columns,
      make_receive_groups(node1_beams.columns, link12.reverse.rx_profile.digital_chains()), kPilot,
      rng, Direction::kUplink);
  const ObservationMatrix up3 = gather_observations(
      link13.reverse, node3_beams.columns,
      make_receive_groups(node1_beams.columns, link13.reverse.rx_profile.digital_chains()), kPilot,
      rng, Direction::kUplink);

  const XZMatrices xz = build_xz(down2, up2, node1_beams.columns, node2_beams.columns, node1.r1, node2.r1);
  const XZMatrices uv = build_xz(down3, up3, node1_beams.columns, node3_beams.columns, node1.r1, node3.r1);
  JointEstimate out = solve_joint_analog_ls(xz, uv);
  out.pilots_used = std::max(down2.pilots_used, down3.pilots_used) + up2.pilots_used + up3.pilots_used;
  return out;
}

}  // namespace recipcal
