#include <cmath>

#include "../oracles/oracles.hpp"
#include "recipcal/calibration.hpp"
#include "recipcal/harness.hpp"
#include "recipcal/two_step.hpp"
#include "test_util.hpp"

using namespace recipcal;

namespace {

DuplexLink planted_link(int m1, int n1, int m2, int n2, double sigma, double noise,
                        std::uint64_t seed, int paths = 4) {
  Rng rng(seed);
  const NodeProfile a = gen_mismatch_profile(n1, m1, sigma, sigma, rng);
  const NodeProfile b = gen_mismatch_profile(n2, m2, sigma, sigma, rng);
  return DuplexLink::make(a, b, gen_multipath_channel(paths, m2, m1, rng), noise);
}

}  // namespace

TEST_CASE("solve_rank1_ls examples") {
  const auto ones = solve_rank1_ls(CMatrix::Ones(3, 3));
  CHECK((ones.left - CVector::Ones(3)).norm() < 1e-12);
  CHECK((ones.right - CVector::Ones(3)).norm() < 1e-12);
  CHECK(ones.residual < 1e-20);

  CVector r(2), t(2);
  r << 1.0, cd{0, 2};
  t << 1.0, 0.5;
  const auto f = solve_rank1_ls(r * t.transpose());
  CHECK((f.left - r).norm() < 1e-12);
  CHECK((f.right - t).norm() < 1e-12);
}

TEST_CASE("solve_rank1_ls under small noise") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const CVector r = normalize_first(testing::random_matrix(4, 1, rng));
    const CVector t = normalize_first(testing::random_matrix(4, 1, rng));
    const CMatrix y = r * t.transpose();
    CMatrix noise = testing::random_matrix(4, 4, rng);
    noise *= 1e-4 * y.norm() / noise.norm();
    const auto f = solve_rank1_ls(y + noise);
    CHECK((f.left - r).norm() < 1e-3 * r.norm());
    CHECK((f.right - t).norm() < 1e-3 * t.norm());
  }
}

TEST_CASE("solve_rank1_ls scaling gauge") {
  Rng rng(2);
  const CMatrix y = testing::random_matrix(4, 4, rng);
  const auto a = solve_rank1_ls(y);
  const auto b = solve_rank1_ls(cd{-3.0, 0.7} * y);
  CHECK((a.left - b.left).norm() < 1e-10);
  CHECK((a.right - b.right).norm() < 1e-10);
}

TEST_CASE("solve_rank1_ls matches the alternating oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix y = testing::random_matrix(4, 4, rng);
    const auto f = solve_rank1_ls(y);
    CHECK(std::abs(f.residual - oracle::rank1_alternating_objective(y)) < 1e-8);
  }
}

TEST_CASE("solve_rank1_ls errors") {
  CHECK_THROWS_AS(solve_rank1_ls(CMatrix::Zero(2, 2)), NormalizationError);
  CMatrix y = CMatrix::Zero(2, 2);
  y(1, 1) = 1.0;
  CHECK_THROWS_AS(solve_rank1_ls(y), NormalizationError);
}

TEST_CASE("digital_calibration planted and identity") {
  Rng rng(1);
  Link l;
  l.tx_profile = NodeProfile::identity(2, 4);
  l.rx_profile = NodeProfile::identity(2, 4);
  l.channel.matrix = CMatrix::Ones(4, 4);
  const CVector f = dft_codebook(4).columns.col(0);
  auto id = digital_calibration(l, f, f, rng);
  CHECK((id.t1_tx - CVector::Ones(2)).norm() < 1e-12);
  CHECK((id.r1_rx - CVector::Ones(2)).norm() < 1e-12);
  CHECK(id.pilots_used == 2);

  l.tx_profile.t1 << 1.0, 3.0 * std::exp(kJ * 0.2);
  l.rx_profile.r1 << 1.0, 0.5 * std::exp(kJ * -1.0);
  const auto p = digital_calibration(l, f, f, rng);
  CHECK((p.t1_tx - l.tx_profile.t1).norm() < 1e-10);
  CHECK((p.r1_rx - l.rx_profile.r1).norm() < 1e-10);
  CHECK(l.tx_counter == 4);
}

TEST_CASE("digital_calibration degenerate beam pair") {
  Rng rng(1);
  Link l;
  l.tx_profile = NodeProfile::identity(2, 4);
  l.rx_profile = NodeProfile::identity(2, 4);
  l.channel.matrix = CMatrix::Identity(4, 4);
  const auto dft = dft_codebook(4).columns;
  // DFT columns 0 and 1 are orthogonal under the plain transpose only when
  // their frequencies do not sum to 0 mod M.
  CHECK_THROWS_AS(digital_calibration(l, dft.col(0), dft.col(1), rng), DegenerateChannelError);
  const auto found = digital_calibration_search(l, dft_codebook(4), BeamformerMatrix::from_columns(dft.conjugate()), rng);
  CHECK((found.t1_tx - CVector::Ones(2)).norm() < 1e-12);
}

TEST_CASE("digital_calibration Monte Carlo at low noise") {
  double acc = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    DuplexLink d = planted_link(8, 2, 8, 2, 0.5, 1e-6, 1000 + trial);
    Rng rng(trial);
    const auto res = digital_calibration_search(d.forward, dft_codebook(8), dft_codebook(8), rng);
    acc += normalized_mse(res.t1_tx, d.forward.tx_profile.t1) +
           normalized_mse(res.r1_rx, d.forward.rx_profile.r1);
  }
  CHECK(acc / 200 < 1e-3);
}

TEST_CASE("build_xz identity gives H") {
  Rng rng(1), crng(4);
  DuplexLink d = DuplexLink::make(NodeProfile::identity(2, 4), NodeProfile::identity(2, 4),
                                  gen_multipath_channel(3, 4, 4, crng), 0.0);
  const auto beams = dft_codebook(4).columns;
  const auto fwd = gather_observations(d.forward, beams, make_receive_groups(beams, 2), kPilot, rng);
  const auto rev = gather_observations(d.reverse, beams, make_receive_groups(beams, 2), kPilot, rng);
  CHECK(fwd.pilots_used == 8);
  CHECK(rev.pilots_used == 8);
  const auto xz = build_xz(fwd, rev, beams, beams, CVector::Ones(2), CVector::Ones(2));
  CHECK(testing::max_abs_diff(xz.x, d.forward.channel.matrix) < 1e-12);
  CHECK(testing::max_abs_diff(xz.z, d.forward.channel.matrix) < 1e-12);
}

TEST_CASE("build_xz planted consistency relation") {
  Rng rng(1);
  DuplexLink d = planted_link(6, 2, 5, 1, 0.5, 0.0, 77);
  const auto pair = digital_calibration_pair(d, dft_codebook(6), dft_codebook(5), rng);
  const auto f = dft_codebook(6).columns;
  const auto b = dft_codebook(5).columns;
  const auto fwd = gather_observations(d.forward, f, make_receive_groups(b, 1), kPilot, rng);
  const auto rev = gather_observations(d.reverse, b, make_receive_groups(f, 2), kPilot, rng);
  const auto xz = build_xz(fwd, rev, f, b, pair.first.r1, pair.second.r1);
  const NodeProfile& s = d.forward.tx_profile;
  const NodeProfile& p = d.forward.rx_profile;
  const CVector alpha = s.analog_ratio();
  const CVector alpha_p = p.analog_ratio();
  const cd beta = (p.r1(0) * s.t1(0)) / (s.r1(0) * p.t1(0));
  double worst = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j)
      worst = std::max(worst, std::abs(xz.x(i, j) * alpha(j) - beta * xz.z(i, j) * alpha_p(i)));
  CHECK(worst < 1e-9 * xz.x.norm());
}

TEST_CASE("build_xz rejects ill-conditioned beams") {
  ObservationMatrix o;
  o.data = CMatrix::Ones(2, 2);
  CMatrix bad = CMatrix::Ones(2, 2);
  CHECK_THROWS_AS(build_xz(o, o, bad, CMatrix::Identity(2, 2), CVector::Ones(1), CVector::Ones(1)),
                  ConditioningError);
}

TEST_CASE("solve_analog_ls examples") {
  const auto ones = solve_analog_ls(CMatrix::Ones(2, 2), CMatrix::Ones(2, 2));
  CHECK((ones.alpha - CVector::Ones(2)).norm() < 1e-12);
  CHECK((ones.alpha_peer - CVector::Ones(2)).norm() < 1e-12);

  Rng rng(5);
  CVector a(2), ap(2);
  a << 1.0, 2.0;
  ap << 1.0, cd{0, 3};
  const CMatrix z = testing::random_matrix(2, 2, rng);
  CMatrix x(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) x(i, j) = z(i, j) * ap(i) / a(j);
  const auto sol = solve_analog_ls(x, z);
  CHECK((sol.alpha - a).norm() < 1e-10);
  CHECK((sol.alpha_peer - ap).norm() < 1e-10);
  CHECK_FALSE(sol.ambiguous);
}

TEST_CASE("solve_analog_ls noisy recovery") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const CVector a = normalize_first(testing::random_matrix(6, 1, rng));
    const CVector ap = normalize_first(testing::random_matrix(6, 1, rng));
    const CMatrix z = testing::random_matrix(6, 6, rng);
    CMatrix x(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) x(i, j) = z(i, j) * ap(i) / a(j);
    CMatrix e = testing::random_matrix(6, 6, rng);
    x += e * (1e-3 * x.norm() / e.norm());
    const auto sol = solve_analog_ls(x, z);
    CHECK((sol.alpha - a).norm() < 1e-2 * a.norm());
    CHECK(sol.residual > 0.0);
  }
}

TEST_CASE("solve_analog_ls matches the eigenvector oracle") {
  Rng rng(123);
  for (int m : {2, 4, 8}) {
    const CMatrix x = testing::random_matrix(m, m, rng);
    const CMatrix z = testing::random_matrix(m, m, rng);
    const auto sol = solve_analog_ls(x, z);
    const CVector ref = oracle::analog_smallest_eigvec(x, z);
    CHECK(std::abs(sol.null_vector.dot(ref)) >= 1 - 1e-8);
  }
}

TEST_CASE("solve_analog_ls errors and ambiguity") {
  CHECK_THROWS_AS(solve_analog_ls(CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)), NormalizationError);
  CHECK_THROWS_AS(solve_analog_ls(CMatrix::Ones(2, 3), CMatrix::Ones(3, 2)), DimensionError);
  // Block-diagonal data decouples the unknowns into two groups.
  CMatrix x = CMatrix::Identity(2, 2);
  try {
    CHECK(solve_analog_ls(x, x).ambiguous);
  } catch (const NormalizationError&) {
    // A null vector with a vanishing first element is equally acceptable.
  }
}

TEST_CASE("analog_calibration identity and planted") {
  Rng rng(1);
  Rng crng(2);
  DuplexLink id = DuplexLink::make(NodeProfile::identity(2, 8), NodeProfile::identity(2, 8),
                                   gen_multipath_channel(4, 8, 8, crng), 0.0);
  const auto dig_id = digital_calibration_pair(id, dft_codebook(8), dft_codebook(8), rng);
  const auto e = analog_calibration(id, dft_codebook(8), dft_codebook(8), dig_id.first, dig_id.second, rng);
  CHECK((e.alpha_hat - CVector::Ones(8)).norm() < 1e-10);
  CHECK((e.alpha_hat_peer - CVector::Ones(8)).norm() < 1e-10);

  DuplexLink d = planted_link(8, 2, 8, 2, 0.3, 0.0, 31);
  const auto dig = digital_calibration_pair(d, dft_codebook(8), dft_codebook(8), rng);
  CHECK(dig.pilots_forward == 2);
  CHECK(dig.pilots_reverse == 2);
  const auto est = analog_calibration(d, dft_codebook(8), dft_codebook(8), dig.first, dig.second, rng);
  CHECK(normalized_mse(est.alpha_hat, d.forward.tx_profile.analog_ratio()) < 1e-10);
  CHECK(normalized_mse(est.alpha_hat_peer, d.forward.rx_profile.analog_ratio()) < 1e-10);
  CHECK(est.pilots_forward == 32);
  CHECK(est.pilots_reverse == 32);
}

TEST_CASE("analog_calibration Monte Carlo at moderate noise") {
  double acc = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    DuplexLink d = planted_link(8, 2, 8, 2, 0.3, 1e-4, 500 + trial);
    Rng rng(trial);
    const auto pair = calibrate_pair(d, dft_codebook(8), dft_codebook(8), rng);
    acc += normalized_mse(pair.estimate.alpha_hat, d.forward.tx_profile.analog_ratio());
  }
  CHECK(acc / 100 < 1e-2);
}

TEST_CASE("calibrate_pair noiseless planted and pilot counts") {
  Rng rng(4);
  DuplexLink d = planted_link(16, 4, 1, 1, 0.5, 0.0, 8);
  const auto p = calibrate_pair(d, dft_codebook(16), dft_codebook(1), rng);
  CHECK(normalized_mse(p.first.t1, d.forward.tx_profile.t1) < 1e-10);
  CHECK(normalized_mse(p.first.r1, d.forward.tx_profile.r1) < 1e-10);
  CHECK(normalized_mse(p.estimate.alpha_hat, d.forward.tx_profile.analog_ratio()) < 1e-10);
  // 4 digital + 16 analog forward; 1 digital + 1 beam over 4 receive groups reverse
  CHECK(p.pilots_forward == 4 + 16);
  CHECK(p.pilots_reverse == 1 + 4);
}

TEST_CASE("reciprocal_tandem examples") {
  Rng rng(3);
  const CVector f = testing::random_matrix(4, 1, rng);
  CHECK(reciprocal_tandem(f, CVector::Ones(4), TandemKind::kReceive) == f);
  CHECK(reciprocal_tandem(f, CVector::Ones(4), TandemKind::kTransmit) == f);
  const CVector two = CVector::Constant(2, 2.0);
  const CVector ones = CVector::Ones(2);
  CHECK(reciprocal_tandem(ones, two, TandemKind::kReceive) == two);
  CHECK(reciprocal_tandem(ones, two, TandemKind::kTransmit) == CVector::Constant(2, 0.5));
  const CVector a = testing::random_matrix(4, 1, rng);
  const CVector back =
      reciprocal_tandem(reciprocal_tandem(f, a, TandemKind::kTransmit), a, TandemKind::kReceive);
  CHECK((back - f).norm() < 1e-14);
  CVector z = a;
  z(2) = 0.0;
  CHECK_THROWS_AS(reciprocal_tandem(f, z, TandemKind::kReceive), NormalizationError);
}

TEST_CASE("tandem beams restore reciprocity") {
  Rng rng(1);
  DuplexLink d = planted_link(8, 1, 4, 1, 0.5, 0.0, 61);
  d.forward.tx_profile.t1.setOnes();
  d.forward.tx_profile.r1.setOnes();
  d.forward.rx_profile.t1.setOnes();
  d.forward.rx_profile.r1.setOnes();
  d.reverse = d.forward.reversed();
  const CVector alpha_ap = d.forward.tx_profile.analog_ratio();
  const CVector alpha_mu = d.forward.rx_profile.analog_ratio();
  const CVector f = array_response(0.4, 8);
  const CVector b = array_response(-0.1, 4);
  const cd ul = transmit_first_chain(d.reverse, b, f, kPilot, rng);
  const cd dl =
      transmit_first_chain(d.forward, reciprocal_tandem(f, alpha_ap, TandemKind::kReceive),
                           reciprocal_tandem(b, alpha_mu, TandemKind::kTransmit), kPilot, rng);
  CHECK(std::abs(dl - ul) < 1e-10 * std::abs(ul));
}

TEST_CASE("inter_ap_ratio identity and planted scalar") {
  Rng rng(1), crng(3);
  const auto h = gen_multipath_channel(4, 8, 8, crng);
  const NodeProfile id = NodeProfile::identity(2, 8);
  const CVector f = array_response(h.paths[0].aod, 8);
  const CVector b = array_response(h.paths[0].aoa, 8).conjugate();

  DuplexLink d = DuplexLink::make(id, id, h, 0.0);
  const auto r = inter_ap_ratio(d, CVector::Ones(8), CVector::Ones(8), f, b, rng);
  CHECK(std::abs(r.c_hat - 1.0) < 1e-10);
  CHECK(d.forward.tx_counter + d.reverse.tx_counter == 2);

  NodeProfile ap1 = id;
  ap1.t1(0) = 2.0;
  DuplexLink p = DuplexLink::make(ap1, id, h, 0.0);
  CHECK(std::abs(inter_ap_ratio(p, CVector::Ones(8), CVector::Ones(8), f, b, rng).c_hat - 2.0) < 1e-10);
}

TEST_CASE("inter_ap_ratio matches c under planted profiles") {
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(trial);
    DuplexLink d = planted_link(8, 2, 8, 2, 0.5, 1e-6, 700 + trial);
    const NodeProfile& a1 = d.forward.tx_profile;
    const NodeProfile& a2 = d.forward.rx_profile;
    const CVector al1 = a1.analog_ratio(), al2 = a2.analog_ratio();
    const cd q1 = a1.t1(0) / (al1(0) * a1.r1(0));
    const cd q2 = a2.t1(0) / (al2(0) * a2.r1(0));
    const auto& path = d.forward.channel.paths[0];
    const CVector f = array_response(path.aod, 8);
    const CVector b = array_response(path.aoa, 8).conjugate();
    const auto r = inter_ap_ratio(d, al1, al2, f, b, rng);
    if (std::abs(r.c_hat - q1 / q2) < 1e-2 * std::abs(q1 / q2)) ++good;
  }
  CHECK(good >= 95);
}

TEST_CASE("inter_ap_ratio degenerate reverse observation") {
  Rng rng(1);
  const NodeProfile id = NodeProfile::identity(1, 4);
  DuplexLink d = DuplexLink::make(id, id, MultipathChannel{CMatrix::Identity(4, 4), {}}, 0.0);
  const CMatrix e = CMatrix::Identity(4, 4);
  CHECK_THROWS_AS(inter_ap_ratio(d, CVector::Ones(4), CVector::Ones(4), e.col(0), e.col(1), rng),
                  DegenerateChannelError);
}

TEST_CASE("joint calibration identity and planted") {
  Rng rng(1), prng(5);
  const NodeProfile n1 = gen_mismatch_profile(2, 8, 0.5, 0.5, prng);
  const NodeProfile n2 = gen_mismatch_profile(2, 8, 0.5, 0.5, prng);
  const NodeProfile n3 = gen_mismatch_profile(2, 8, 0.5, 0.5, prng);
  DuplexLink l12 = DuplexLink::make(n1, n2, gen_multipath_channel(4, 8, 8, prng), 0.0);
  DuplexLink l13 = DuplexLink::make(n1, n3, gen_multipath_channel(4, 8, 8, prng), 0.0);
  const auto cb = dft_codebook(8);
  const auto d12 = digital_calibration_pair(l12, cb, cb, rng);
  const auto d13 = digital_calibration_pair(l13, cb, cb, rng);
  const auto j = joint_analog_calibration(l12, l13, cb, cb, cb, d12.first, d12.second, d13.second, rng);
  CHECK(normalized_mse(j.alpha, n1.analog_ratio()) < 1e-10);
  CHECK(normalized_mse(j.alpha2, n2.analog_ratio()) < 1e-10);
  CHECK(normalized_mse(j.alpha3, n3.analog_ratio()) < 1e-10);
  CHECK(j.pilots_used == 3 * 32);

  const NodeProfile id = NodeProfile::identity(2, 8);
  DuplexLink i12 = DuplexLink::make(id, id, gen_multipath_channel(4, 8, 8, prng), 0.0);
  DuplexLink i13 = DuplexLink::make(id, id, gen_multipath_channel(4, 8, 8, prng), 0.0);
  const DigitalEstimates ones{CVector::Ones(2), CVector::Ones(2)};
  const auto ji = joint_analog_calibration(i12, i13, cb, cb, cb, ones, ones, ones, rng);
  CHECK((ji.alpha - CVector::Ones(8)).norm() < 1e-10);
  CHECK((ji.alpha2 - CVector::Ones(8)).norm() < 1e-10);
  CHECK((ji.alpha3 - CVector::Ones(8)).norm() < 1e-10);
}

TEST_CASE("star solver with swapped roles recovers both ends") {
  Rng rng(1);
  DuplexLink d = planted_link(8, 2, 8, 2, 0.5, 0.0, 90);
  const auto p = calibrate_pair(d, dft_codebook(8), dft_codebook(8), rng);
  const auto star = solve_star_analog_ls({swap_roles(p.xz)});
  CHECK(normalized_mse(star.center, d.forward.rx_profile.analog_ratio()) < 1e-10);
  CHECK(normalized_mse(star.peers[0], d.forward.tx_profile.analog_ratio()) < 1e-10);
  CHECK_THROWS_AS(solve_star_analog_ls({}), DimensionError);
}

TEST_CASE("star solver agrees with the dense SVD on one system") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix x = testing::random_matrix(6, 4, rng);
    const CMatrix z = x + 0.05 * testing::random_matrix(6, 4, rng);
    const auto dense = solve_analog_ls(x, z);
    const auto star = solve_star_analog_ls({{x, z}});
    CHECK((dense.alpha - star.center).norm() < 1e-8 * dense.alpha.norm());
    CHECK((dense.alpha_peer - star.peers[0]).norm() < 1e-8 * dense.alpha_peer.norm());
    CHECK(std::abs(dense.residual - star.residual) < 1e-8 * x.squaredNorm());
  }
}
