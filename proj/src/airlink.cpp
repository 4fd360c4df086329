#include "recipcal/airlink.hpp"

#include <string>

namespace recipcal {

namespace {

void require_dim(bool ok, const std::string& what) {
  if (!ok) throw DimensionError("transmit: " + what);
}

}  // namespace

Link Link::reversed() const {
  Link rev;
  rev.tx_profile = rx_profile;
  rev.rx_profile = tx_profile;
  rev.channel = channel.reversed();
  rev.noise_variance = noise_variance;
  return rev;
}

DuplexLink DuplexLink::make(const NodeProfile& first, const NodeProfile& second,
                            const MultipathChannel& first_to_second, double noise_variance) {
  if (first_to_second.matrix.rows() != second.antennas() ||
      first_to_second.matrix.cols() != first.antennas()) {
    throw DimensionError("DuplexLink: channel shape does not match node antenna counts");
  }
  DuplexLink d;
  d.forward.tx_profile = first;
  d.forward.rx_profile = second;
  d.forward.channel = first_to_second;
  d.forward.noise_variance = noise_variance;
  d.reverse = d.forward.reversed();
  return d;
}

CVector transmit(Link& link, const CMatrix& tx_beams, const CVector& tx_digital,
                 const CMatrix& rx_beams, Rng& rng) {
  const auto& tx = link.tx_profile;
  const auto& rx = link.rx_profile;
  const auto& h = link.channel.matrix;
  require_dim(tx_beams.rows() == tx.antennas(),
              "tx beam rows (" + std::to_string(tx_beams.rows()) + ") != tx antennas (" +
                  std::to_string(tx.antennas()) + ")");
  require_dim(tx_beams.cols() == tx.digital_chains(),
              "tx beam columns != tx digital chains");
  require_dim(tx_digital.size() == tx.digital_chains(), "tx digital input length != tx chains");
  require_dim(rx_beams.rows() == rx.antennas(),
              "rx beam rows (" + std::to_string(rx_beams.rows()) + ") != rx antennas (" +
                  std::to_string(rx.antennas()) + ")");
  require_dim(rx_beams.cols() == rx.digital_chains(), "rx beam columns != rx digital chains");
  require_dim(h.rows() == rx.antennas() && h.cols() == tx.antennas(),
              "channel shape does not match the profiles");

  const CVector radiated = tx.t2.asDiagonal() * (tx_beams * tx.t1.cwiseProduct(tx_digital));
  const CVector at_antennas = rx.r2.asDiagonal() * (h * radiated);
  CVector y = rx.r1.asDiagonal() * (rx_beams.transpose() * at_antennas);
  if (link.noise_variance > 0.0) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += complex_gaussian(rng, link.noise_variance);
  }
  ++link.tx_counter;
  return y;
}

cd transmit_first_chain(Link& link, const CVector& tx_beam, const CVector& rx_beam, cd pilot,
                        Rng& rng) {
  const int ntx = link.tx_profile.digital_chains();
  const int nrx = link.rx_profile.digital_chains();
  const CMatrix tx_beams = tx_beam.replicate(1, ntx);
  const CMatrix rx_beams = rx_beam.replicate(1, nrx);
  CVector x = CVector::Zero(ntx);
  x(0) = pilot;
  return transmit(link, tx_beams, x, rx_beams, rng)(0);
}

std::vector<CMatrix> make_receive_groups(const CMatrix& rx_beams, int digital_chains) {
  if (digital_chains < 1) throw DimensionError("make_receive_groups: need >= 1 digital chain");
  const auto m = static_cast<int>(rx_beams.cols());
  const int groups = (m + digital_chains - 1) / digital_chains;
  std::vector<CMatrix> out;
  out.reserve(groups);
  for (int k = 0; k < groups; ++k) {
    CMatrix g(rx_beams.rows(), digital_chains);
    for (int j = 0; j < digital_chains; ++j) {
      const int idx = k * digital_chains + j;
      g.col(j) = idx < m ? rx_beams.col(idx) : rx_beams.col(0);
    }
    out.push_back(std::move(g));
  }
  return out;
}

ObservationMatrix gather_observations(Link& link, const CMatrix& tx_beams,
                                      const std::vector<CMatrix>& rx_groups, cd pilot, Rng& rng,
                                      Direction direction) {
  const int nrx = link.rx_profile.digital_chains();
  const int mrx = link.rx_antennas();
  const int ntx = link.tx_profile.digital_chains();
  for (const auto& g : rx_groups) {
    if (g.cols() != nrx) {
      throw DimensionError("gather_observations: receive group width " +
                           std::to_string(g.cols()) + " != rx digital chains " +
                           std::to_string(nrx));
    }
  }
  if (static_cast<long>(rx_groups.size()) * nrx < mrx) {
    throw DimensionError("gather_observations: receive groups do not cover all rx antennas");
  }

  ObservationMatrix obs;
  obs.direction = direction;
  obs.data = CMatrix::Zero(mrx, tx_beams.cols());
  const std::uint64_t before = link.tx_counter;
  CVector x = CVector::Zero(ntx);
  x(0) = pilot;
  for (Eigen::Index i = 0; i < tx_beams.cols(); ++i) {
    const CMatrix f = tx_beams.col(i).replicate(1, ntx);
    for (std::size_t k = 0; k < rx_groups.size(); ++k) {
      const CVector y = transmit(link, f, x, rx_groups[k], rng);
      for (int j = 0; j < nrx; ++j) {
        const long row = static_cast<long>(k) * nrx + j;
        if (row < mrx) obs.data(row, i) = y(j);
      }
    }
  }
  obs.pilots_used = link.tx_counter - before;
  return obs;
}

}  // namespace recipcal
