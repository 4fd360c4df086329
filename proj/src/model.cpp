#include "recipcal/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace recipcal {

CVector normalize_first(const CVector& v, double tol) {
  if (v.size() == 0) throw NormalizationError("cannot normalize an empty vector");
  const cd first = v(0);
  if (std::abs(first) <= tol || first == cd{0.0, 0.0}) {
    throw NormalizationError("first element is numerically zero (|v0| = " +
                             std::to_string(std::abs(first)) + ")");
  }
  return v / first;
}

double condition_number(const CMatrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  // Eigenvalues of the Gram matrix are the squared singular values; only
  // used against thresholds far below 1/sqrt(eps), so squaring is harmless.
  const CMatrix gram = m.rows() >= m.cols() ? CMatrix(m.adjoint() * m) : CMatrix(m * m.adjoint());
  const RVector lambda = Eigen::SelfAdjointEigenSolver<CMatrix>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  const double lmax = lambda(lambda.size() - 1);
  const double lmin = lambda(0);
  if (!(lmin > 0.0) || !(lmax > 0.0)) return std::numeric_limits<double>::infinity();
  return std::sqrt(lmax / lmin);
}

void SystemConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(num_aps >= 1, "num_aps must be >= 1");
  require(num_users >= 1, "num_users must be >= 1");
  require(antennas_ap >= 1, "antennas_ap must be >= 1");
  require(digital_chains_ap >= 1, "digital_chains_ap must be >= 1");
  require(digital_chains_ap <= antennas_ap, "digital_chains_ap must not exceed antennas_ap");
  require(antennas_mu >= 1, "antennas_mu must be >= 1");
  require(digital_chains_mu >= 1, "digital_chains_mu must be >= 1");
  require(digital_chains_mu <= antennas_mu, "digital_chains_mu must not exceed antennas_mu");
  require(num_paths >= 1, "num_paths must be >= 1");
  require(mismatch_sigma_mag >= 0.0, "mismatch_sigma_mag must be >= 0");
  require(mismatch_sigma_phase >= 0.0, "mismatch_sigma_phase must be >= 0");
  require(noise_variance >= 0.0, "noise_variance must be >= 0");
  require(tx_power > 0.0, "tx_power must be > 0");
  require(num_trials >= 1, "num_trials must be >= 1");
}

CVector NodeProfile::analog_ratio() const { return r2.cwiseQuotient(t2); }

NodeProfile NodeProfile::identity(int digital_chains, int antennas) {
  return {CVector::Ones(digital_chains), CVector::Ones(digital_chains), CVector::Ones(antennas),
          CVector::Ones(antennas)};
}

CVector array_response(double theta, int antennas) {
  CVector a(antennas);
  const double phase = kPi * std::sin(theta);
  const double scale = 1.0 / std::sqrt(static_cast<double>(antennas));
  for (int m = 0; m < antennas; ++m) a(m) = std::polar(scale, phase * m);
  return a;
}

MultipathChannel MultipathChannel::from_paths(std::vector<PathParams> paths, int rx_antennas,
                                              int tx_antennas) {
  MultipathChannel ch;
  ch.matrix = CMatrix::Zero(rx_antennas, tx_antennas);
  const double scale =
      std::sqrt(static_cast<double>(rx_antennas) * tx_antennas / static_cast<double>(paths.size()));
  for (const auto& p : paths) {
    ch.matrix += (scale * p.gain) * array_response(p.aoa, rx_antennas) *
                 array_response(p.aod, tx_antennas).adjoint();
  }
  ch.paths = std::move(paths);
  return ch;
}

MultipathChannel MultipathChannel::reversed() const {
  MultipathChannel rev;
  rev.matrix = matrix.transpose();
  rev.paths = paths;
  // a(theta)^* = a(-theta), so the transpose swaps and negates the angles.
  for (auto& p : rev.paths) {
    std::swap(p.aoa, p.aod);
    p.aoa = -p.aoa;
    p.aod = -p.aod;
  }
  return rev;
}

MultipathChannel gen_multipath_channel(int num_paths, int rx_antennas, int tx_antennas, Rng& rng) {
  if (num_paths < 1) throw DimensionError("gen_multipath_channel: num_paths must be >= 1");
  std::uniform_real_distribution<double> angle(-kPi / 2.0, kPi / 2.0);
  std::vector<PathParams> paths;
  paths.reserve(num_paths);
  for (int l = 0; l < num_paths; ++l) {
    PathParams p;
    p.gain = complex_gaussian(rng, 1.0);
    p.aod = angle(rng);
    p.aoa = angle(rng);
    paths.push_back(p);
  }
  return MultipathChannel::from_paths(std::move(paths), rx_antennas, tx_antennas);
}

namespace {

CVector draw_coefficients(int n, double sigma_mag, double sigma_phase, Rng& rng) {
  CVector v(n);
  // Zero-width distributions are not drawn from, so a degenerate profile
  // is exactly 1 and consumes no randomness for that component.
  for (int i = 0; i < n; ++i) {
    double g = 0.0;
    double phi = 0.0;
    if (sigma_mag > 0.0) g = std::normal_distribution<double>(0.0, sigma_mag)(rng);
    if (sigma_phase > 0.0) phi = std::uniform_real_distribution<double>(-sigma_phase, sigma_phase)(rng);
    v(i) = std::polar(std::exp(g), phi);
  }
  return v;
}

}  // namespace

NodeProfile gen_mismatch_profile(int digital_chains, int antennas, double sigma_mag,
                                 double sigma_phase, Rng& rng) {
  NodeProfile p;
  p.t1 = draw_coefficients(digital_chains, sigma_mag, sigma_phase, rng);
  p.r1 = draw_coefficients(digital_chains, sigma_mag, sigma_phase, rng);
  p.t2 = draw_coefficients(antennas, sigma_mag, sigma_phase, rng);
  p.r2 = draw_coefficients(antennas, sigma_mag, sigma_phase, rng);
  return p;
}

BeamformerMatrix BeamformerMatrix::from_columns(CMatrix columns) {
  BeamformerMatrix b;
  b.columns = std::move(columns);
  if (b.columns.rows() == b.columns.cols() && b.columns.size() > 0) {
    Eigen::JacobiSVD<CMatrix> svd(b.columns);
    const auto& s = svd.singularValues();
    b.is_full_rank = s(s.size() - 1) > kFullRankRatio * s(0);
  }
  return b;
}

BeamformerMatrix dft_codebook(int antennas) {
  CMatrix w(antennas, antennas);
  const double scale = 1.0 / std::sqrt(static_cast<double>(antennas));
  for (int c = 0; c < antennas; ++c) {
    for (int m = 0; m < antennas; ++m) {
      // Reduce m*c mod M first so the phase stays accurate for large M.
      const double frac = static_cast<double>((static_cast<long>(m) * c) % antennas) / antennas;
      w(m, c) = std::polar(scale, 2.0 * kPi * frac);
    }
  }
  BeamformerMatrix b;
  b.columns = std::move(w);
  b.is_full_rank = true;
  return b;
}

}  // namespace recipcal
