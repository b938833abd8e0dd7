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

#include "latentdecode/roi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "latentdecode/error.hpp"
#include "latentdecode/pipeline.hpp"

namespace latentdecode::roi {

Eigen::VectorXd synth_pattern(const RoiMask& mask, std::size_t n_voxels) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_voxels));
  for (std::size_t v : mask.voxel_indices) {
    if (v >= n_voxels)
      fail(ErrorCode::IndexOutOfRange, "ROI " + mask.name + " index " + std::to_string(v) +
                                           " >= " + std::to_string(n_voxels));
    p[static_cast<Eigen::Index>(v)] = 1.0;
  }
  return p;
}

Eigen::VectorXd percentile_ranks(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  Eigen::VectorXd pct(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && values[order[static_cast<std::size_t>(j + 1)]] == values[order[static_cast<std::size_t>(i)]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k)
      pct[order[static_cast<std::size_t>(k)]] = 100.0 * (avg_rank - 0.5) / static_cast<double>(n);
    i = j + 1;
  }
  return pct;
}

VoxelWeightStats weight_percentile_map(const Eigen::MatrixXd& wh, const Eigen::MatrixXd& wd) {
  require(wh.rows() == wd.rows(), ErrorCode::ShapeMismatch,
          "instance and dense weights cover different voxel counts");
  VoxelWeightStats s;
  s.l1_instance = wh.cwiseAbs().rowwise().sum();
  s.l1_dense = wd.cwiseAbs().rowwise().sum();
  s.pct_instance = percentile_ranks(s.l1_instance);
  s.pct_dense = percentile_ranks(s.l1_dense);
  s.difference = s.pct_instance - s.pct_dense;
  return s;
}

VoxelWeightStats weight_percentile_map(const pipeline::DecoderSet& decoders) {
  return weight_percentile_map(decoders.model_h.weights, decoders.model_d.weights);
}

std::vector<RoiSummaryRow> roi_summary(const VoxelWeightStats& stats, const std::vector<RoiMask>& masks) {
  std::vector<RoiSummaryRow> rows;
  for (const auto& m : masks) {
    if (m.voxel_indices.empty()) fail(ErrorCode::EmptyMask, "ROI " + m.name + " has no voxels");
    RoiSummaryRow r;
    r.name = m.name;
    r.n_voxels = m.voxel_indices.size();
    double sum = 0.0;
    for (std::size_t v : m.voxel_indices) {
      require(v < static_cast<std::size_t>(stats.difference.size()), ErrorCode::IndexOutOfRange,
              "ROI " + m.name + " exceeds the voxel count");
      sum += stats.difference[static_cast<Eigen::Index>(v)];
    }
    const double n = static_cast<double>(r.n_voxels);
    r.mean_difference = sum / n;
    if (r.n_voxels > 1) {
      double ss = 0.0;
      for (std::size_t v : m.voxel_indices) {
        const double d = stats.difference[static_cast<Eigen::Index>(v)] - r.mean_difference;
        ss += d * d;
      }
      r.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

ImageTensor render_pattern(const pipeline::DecoderSet& decoders, const oracle::GeneratorOracle& gen,
                           const Eigen::VectorXd& pattern) {
  require(static_cast<std::size_t>(pattern.size()) == decoders.n_voxels(), ErrorCode::ShapeMismatch,
          "pattern length does not match the decoders");
  const auto triple = pipeline::decode_normalized(decoders, pattern.transpose()).front();
  const double norm = triple.h.norm();
  if (!(norm > 0.0)) fail(ErrorCode::ZeroNormInstance, "decoded instance features have zero norm");
  return gen.generate_from_dense(triple.h / norm, triple.z.tail(), triple.d);
}

ImageTensor roi_maximize(const pipeline::DecoderSet& decoders, const oracle::GeneratorOracle& gen,
                         const RoiMask& mask) {
  return render_pattern(decoders, gen, synth_pattern(mask, decoders.n_voxels()));
}

void write_weight_map_csv(std::ostream& out, const VoxelWeightStats& s) {
  out << "voxel,l1_instance,l1_dense,pct_instance,pct_dense,diff\n";
  char line[192];
  for (Eigen::Index v = 0; v < s.difference.size(); ++v) {
    std::snprintf(line, sizeof line, "%ld,%.9g,%.9g,%.9g,%.9g,%.9g\n", static_cast<long>(v),
                  s.l1_instance[v], s.l1_dense[v], s.pct_instance[v], s.pct_dense[v], s.difference[v]);
    out << line;
  }
}

void write_roi_summary_csv(std::ostream& out, const std::vector<RoiSummaryRow>& rows) {
  out << "roi,mean_diff,se_across_voxels,n_voxels\n";
  char line[192];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%.9g,%.9g,%zu\n", r.name.c_str(), r.mean_difference,
                  r.standard_error, r.n_voxels);
    out << line;
  }
}

}  // namespace latentdecode::roi
