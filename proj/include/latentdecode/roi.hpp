// Copyright 2026 The LatentDecode Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LATENTDECODE_ROI_HPP
#define LATENTDECODE_ROI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "latentdecode/dataio.hpp"
#include "latentdecode/oracle.hpp"

namespace latentdecode::pipeline {
struct DecoderSet;
}

namespace latentdecode::roi {

/// Per-voxel comparison of instance-feature and dense-vector decoder weights.
struct VoxelWeightStats {
  Eigen::VectorXd l1_instance;
  Eigen::VectorXd l1_dense;
  Eigen::VectorXd pct_instance;  // [0, 100]
  Eigen::VectorXd pct_dense;
  Eigen::VectorXd difference;    // pct_instance - pct_dense
};

struct RoiSummaryRow {
  std::string name;
  double mean_difference = 0.0;
  double standard_error = 0.0;  // across voxels of the ROI
  std::size_t n_voxels = 0;
};

/// 1 on the ROI's voxels, 0 elsewhere.
Eigen::VectorXd synth_pattern(const RoiMask& mask, std::size_t n_voxels);

/// Mid-rank percentiles: 100 * (average_rank - 0.5) / n, ranks 1-based.
Eigen::VectorXd percentile_ranks(const Eigen::VectorXd& values);

/// Row-wise L1 norms of both weight matrices, percentile-ranked across voxels.
VoxelWeightStats weight_percentile_map(const Eigen::MatrixXd& instance_weights,
                                       const Eigen::MatrixXd& dense_weights);
VoxelWeightStats weight_percentile_map(const pipeline::DecoderSet& decoders);

std::vector<RoiSummaryRow> roi_summary(const VoxelWeightStats& stats,
                                       const std::vector<RoiMask>& masks);

/// Decodes the ROI's indicator pattern, rescales the instance features to unit
/// norm and renders with the decoded noise tail and dense vector. The pattern
/// is fed to the regression models directly, without voxel standardization.
ImageTensor roi_maximize(const pipeline::DecoderSet& decoders, const oracle::GeneratorOracle& gen,
                         const RoiMask& mask);

/// Image for an arbitrary input pattern through the same path.
ImageTensor render_pattern(const pipeline::DecoderSet& decoders, const oracle::GeneratorOracle& gen,
                           const Eigen::VectorXd& pattern);

/// CSV `voxel,l1_instance,l1_dense,pct_instance,pct_dense,diff`.
void write_weight_map_csv(std::ostream& out, const VoxelWeightStats& stats);
/// CSV `roi,mean_diff,se_across_voxels,n_voxels`.
void write_roi_summary_csv(std::ostream& out, const std::vector<RoiSummaryRow>& rows);

}  // namespace latentdecode::roi

#endif  // LATENTDECODE_ROI_HPP
