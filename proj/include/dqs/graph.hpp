#pragma once

#include <Eigen/Dense>
#include <string>

#include "dqs/optics.hpp"

namespace dqs {

/// Feature layout for setup graphs. The one-hot block identifies
/// (kind, angle) and never the path; paths live in the positional block.
struct EncodingConfig {
  int n_photons = 4;
  int angle_grid = 4;

  /// DC00, DC11, DCBell, BS, PBS, grid HWP types, grid QWP types, R, start, end.
  int one_hot_dim() const { return 8 + 2 * angle_grid; }
  int positional_dim() const { return n_photons; }
  int feature_dim() const { return one_hot_dim() + positional_dim(); }

  int start_slot() const { return 6 + 2 * angle_grid; }
  int end_slot() const { return 7 + 2 * angle_grid; }
  /// One-hot column for a device; throws SetupError for off-grid angles.
  int slot(const Device& d) const;

  friend bool operator==(const EncodingConfig&, const EncodingConfig&) = default;
};

/// Node 0 is the start marker, then the sources, then the sequence in order,
/// then the end marker. adjacency(i, j) = 1 iff there is an edge i -> j.
struct SetupGraph {
  Eigen::MatrixXd features;
  Eigen::MatrixXi adjacency;

  int n_nodes() const { return static_cast<int>(features.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
};

/// Edges: start -> every source; device i -> device j when j is the next
/// device acting on a path that i also acts on; the last device on each path
/// -> end.
SetupGraph encode_setup(const OpticalSetup& setup, const EncodingConfig& config);

std::string matrix_csv(const Eigen::MatrixXd& m);
std::string matrix_csv(const Eigen::MatrixXi& m);

}  // namespace dqs
