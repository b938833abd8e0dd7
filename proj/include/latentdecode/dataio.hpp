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

#ifndef LATENTDECODE_DATAIO_HPP
#define LATENTDECODE_DATAIO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace latentdecode {

/// On-disk storage matrix: 32-bit floats, row-major. All computation in the
/// toolkit happens on Eigen::MatrixXd; conversion is explicit.
using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Size of the fixed LDM1 header in bytes.
inline constexpr std::size_t kLdm1HeaderSize = 16;

Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Narrowing helpers. to_storage rejects non-finite entries.
Matrix to_storage(const Eigen::MatrixXd& m);
Eigen::MatrixXd to_compute(const Matrix& m);

Eigen::MatrixXd read_matrix_d(const std::filesystem::path& path);
void write_matrix_d(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Small numeric CSV fixtures: one row per line, comma separated, no header.
Matrix read_csv_matrix(const std::filesystem::path& path);

struct AveragedTrials {
  Eigen::MatrixXd means;
  std::vector<std::string> ids;  // first-appearance order
  std::vector<std::size_t> counts;
};

/// Collapses repeated presentations of each stimulus to their arithmetic mean.
AveragedTrials average_repetitions(const Eigen::MatrixXd& trials,
                                   const std::vector<std::string>& trial_ids);

/// One identifier per line; blank lines are skipped.
std::vector<std::string> read_id_list(const std::filesystem::path& path);
void write_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids);

struct RoiMask {
  std::string name;
  std::vector<std::size_t> voxel_indices;  // sorted, unique
};

/// Parses `NAME: idx idx ...` lines; `#` starts a comment.
std::vector<RoiMask> read_roi_masks(const std::filesystem::path& path, std::size_t n_voxels);
std::vector<RoiMask> parse_roi_masks(const std::string& text, std::size_t n_voxels);

struct DecodingDataset {
  Eigen::MatrixXd x_train;
  std::vector<std::string> train_stimulus_ids;
  Eigen::MatrixXd x_test_trials;
  std::vector<std::string> test_trial_stimulus_ids;
  std::size_t n_voxels = 0;
  std::vector<RoiMask> roi_masks;

  /// Checks row alignment, equal repetition counts, disjoint train/test ids
  /// and ROI bounds. Throws on the first violation.
  void validate() const;
};

/// RGB image with values in [0,1], stored height-major, then width, then
/// channel.
class ImageTensor {
 public:
  static constexpr int kChannels = 3;

  ImageTensor() = default;
  ImageTensor(int height, int width);
  ImageTensor(int height, int width, Eigen::VectorXd values);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return kChannels; }
  Eigen::Index size() const { return values_.size(); }

  double& at(int y, int x, int c) { return values_[index(y, x, c)]; }
  double at(int y, int x, int c) const { return values_[index(y, x, c)]; }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  bool same_shape(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

 private:
  Eigen::Index index(int y, int x, int c) const {
    return (static_cast<Eigen::Index>(y) * width_ + x) * kChannels + c;
  }

  int height_ = 0;
  int width_ = 0;
  Eigen::VectorXd values_;
};

void require_same_shape(const ImageTensor& a, const ImageTensor& b);

/// Binary P6, maxval 255; values quantized as round(v * 255).
void write_ppm(const std::filesystem::path& path, const ImageTensor& image);
ImageTensor read_ppm(const std::filesystem::path& path);

}  // namespace latentdecode

#endif  // LATENTDECODE_DATAIO_HPP
