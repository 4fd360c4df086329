#pragma once

#include <cstdint>
#include <vector>

#include "recipcal/rng.hpp"
#include "recipcal/types.hpp"

namespace recipcal {

/// Scenario parameters shared by the simulator and the CLI config file.
struct SystemConfig {
  int num_aps = 2;
  int num_users = 2;
  int antennas_ap = 16;
  int digital_chains_ap = 4;
  int antennas_mu = 1;
  int digital_chains_mu = 1;
  int num_paths = 4;
  double mismatch_sigma_mag = 0.5;    // std of ln|coefficient|
  double mismatch_sigma_phase = 0.5;  // half-width of the uniform phase, radians
  double noise_variance = 1e-2;
  double tx_power = 1.0;
  std::uint64_t master_seed = 1;
  int num_trials = 200;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Per-node reciprocity coefficients: diagonals of the digital (t1, r1,
/// length N) and analog (t2, r2, length M) transmit/receive chain matrices.
struct NodeProfile {
  CVector t1;
  CVector r1;
  CVector t2;
  CVector r2;

  int digital_chains() const { return static_cast<int>(t1.size()); }
  int antennas() const { return static_cast<int>(t2.size()); }

  /// r2 ./ t2, the analog ratio the calibration recovers up to scale.
  CVector analog_ratio() const;

  static NodeProfile identity(int digital_chains, int antennas);
};

struct PathParams {
  cd gain;
  double aod;  // radians
  double aoa;  // radians
};

/// Narrowband geometric channel, oriented transmitter -> receiver
/// (rows = receive antennas).
struct MultipathChannel {
  CMatrix matrix;
  std::vector<PathParams> paths;

  /// Rebuilds the matrix from `paths`.
  static MultipathChannel from_paths(std::vector<PathParams> paths, int rx_antennas,
                                     int tx_antennas);
  /// The same propagation medium seen from the other end.
  MultipathChannel reversed() const;
};

/// Analog (phase-shift network) beams stored column-wise. Every entry has
/// modulus 1/sqrt(rows).
struct BeamformerMatrix {
  CMatrix columns;
  bool is_full_rank = false;

  int antennas() const { return static_cast<int>(columns.rows()); }
  int count() const { return static_cast<int>(columns.cols()); }

  /// Wraps `columns`, setting is_full_rank from its singular values.
  static BeamformerMatrix from_columns(CMatrix columns);
};

/// Half-wavelength ULA steering vector, unit norm.
CVector array_response(double theta, int antennas);

MultipathChannel gen_multipath_channel(int num_paths, int rx_antennas, int tx_antennas, Rng& rng);

NodeProfile gen_mismatch_profile(int digital_chains, int antennas, double sigma_mag,
                                 double sigma_phase, Rng& rng);

/// Unitary DFT matrix; column c steers to spatial frequency c/M.
BeamformerMatrix dft_codebook(int antennas);

/// Smallest/largest singular value ratio above which a square beam set
/// counts as full rank.
inline constexpr double kFullRankRatio = 1e-9;

}  // namespace recipcal
