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

#include "latentdecode/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "latentdecode/error.hpp"

namespace latentdecode {

namespace {

constexpr char kMagic[4] = {'L', 'D', 'M', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "short write to " + path.string());
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Matrix read_matrix(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  const std::string bytes = read_file(path);
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin())) fail(ErrorCode::BadMagic, path.string());
  if (bytes.size() < kLdm1HeaderSize)
    fail(ErrorCode::ShapeMismatch, path.string() + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t rows = get_u32(p + 4);
  const std::uint64_t cols = get_u32(p + 8);
  const std::uint64_t payload = bytes.size() - kLdm1HeaderSize;
  if (payload != rows * cols * 4)
    fail(ErrorCode::ShapeMismatch, path.string() + ": header declares " + std::to_string(rows) +
                                       "x" + std::to_string(cols) + " but payload has " +
                                       std::to_string(payload) + " bytes");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* q = p + kLdm1HeaderSize;
  for (Eigen::Index i = 0; i < m.size(); ++i, q += 4) {
    const float v = std::bit_cast<float>(get_u32(q));
    if (!std::isfinite(v))
      fail(ErrorCode::NonFiniteValue, path.string() + ": entry " + std::to_string(i));
    m.data()[i] = v;
  }
  return m;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::string out;
  out.reserve(kLdm1HeaderSize + static_cast<std::size_t>(m.size()) * 4);
  out.append(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  put_u32(out, 0);
  for (Eigen::Index i = 0; i < m.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(m.data()[i]));
  write_file(path, out);
}

Matrix to_storage(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) fail(ErrorCode::NonFiniteValue, "matrix has non-finite entries");
  return m.cast<float>();
}

Eigen::MatrixXd to_compute(const Matrix& m) { return m.cast<double>(); }

Eigen::MatrixXd read_matrix_d(const std::filesystem::path& path) {
  return to_compute(read_matrix(path));
}

void write_matrix_d(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  write_matrix(path, to_storage(m));
}

Matrix read_csv_matrix(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<float>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<float> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      const std::string t = trim(cell);
      std::size_t used = 0;
      float v = 0.0f;
      try {
        v = std::stof(t, &used);
      } catch (const std::exception&) {
        fail(ErrorCode::UnknownFormat, path.string() + ": bad cell '" + t + "'");
      }
      if (used != t.size()) fail(ErrorCode::UnknownFormat, path.string() + ": bad cell '" + t + "'");
      if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, path.string());
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::ShapeMismatch, path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j];
  return m;
}

AveragedTrials average_repetitions(const Eigen::MatrixXd& trials,
                                   const std::vector<std::string>& trial_ids) {
  if (trials.rows() == 0 || trial_ids.empty()) fail(ErrorCode::EmptyInput, "no trials to average");
  if (static_cast<std::size_t>(trials.rows()) != trial_ids.size())
    fail(ErrorCode::ShapeMismatch, "trial id count does not match trial rows");

  AveragedTrials out;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& id : trial_ids) {
    if (slot.emplace(id, out.ids.size()).second) {
      out.ids.push_back(id);
      out.counts.push_back(0);
    }
  }
  out.means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.ids.size()), trials.cols());
  for (std::size_t r = 0; r < trial_ids.size(); ++r) {
    const std::size_t k = slot.at(trial_ids[r]);
    out.means.row(static_cast<Eigen::Index>(k)) += trials.row(static_cast<Eigen::Index>(r));
    ++out.counts[k];
  }
  for (std::size_t k = 0; k < out.ids.size(); ++k)
    out.means.row(static_cast<Eigen::Index>(k)) /= static_cast<double>(out.counts[k]);
  return out;
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

void write_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += id + "\n";
  write_file(path, out);
}

std::vector<RoiMask> parse_roi_masks(const std::string& text, std::size_t n_voxels) {
  std::istringstream in(text);
  std::vector<RoiMask> masks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      fail(ErrorCode::UnknownFormat, "ROI line " + std::to_string(line_no) + " has no ':'");
    RoiMask mask;
    mask.name = trim(line.substr(0, colon));
    if (mask.name.empty() || mask.name.find_first_of(" \t") != std::string::npos)
      fail(ErrorCode::UnknownFormat, "ROI line " + std::to_string(line_no) + " has a bad name");
    std::istringstream idx(line.substr(colon + 1));
    std::string tok;
    while (idx >> tok) {
      if (tok.find_first_not_of("0123456789") != std::string::npos)
        fail(ErrorCode::UnknownFormat, "ROI " + mask.name + ": bad index '" + tok + "'");
      const unsigned long long v = std::stoull(tok);
      if (v >= n_voxels)
        fail(ErrorCode::IndexOutOfRange, "ROI " + mask.name + ": index " + tok +
                                             " >= n_voxels " + std::to_string(n_voxels));
      mask.voxel_indices.push_back(static_cast<std::size_t>(v));
    }
    std::sort(mask.voxel_indices.begin(), mask.voxel_indices.end());
    mask.voxel_indices.erase(std::unique(mask.voxel_indices.begin(), mask.voxel_indices.end()),
                             mask.voxel_indices.end());
    if (mask.voxel_indices.empty()) fail(ErrorCode::EmptyMask, "ROI " + mask.name + " is empty");
    masks.push_back(std::move(mask));
  }
  return masks;
}

std::vector<RoiMask> read_roi_masks(const std::filesystem::path& path, std::size_t n_voxels) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  return parse_roi_masks(read_file(path), n_voxels);
}

void DecodingDataset::validate() const {
  require(static_cast<std::size_t>(x_train.cols()) == n_voxels &&
              static_cast<std::size_t>(x_test_trials.cols()) == n_voxels,
          ErrorCode::ShapeMismatch, "voxel count differs between train and test");
  require(static_cast<std::size_t>(x_train.rows()) == train_stimulus_ids.size(),
          ErrorCode::ShapeMismatch, "train ids do not match train rows");
  require(static_cast<std::size_t>(x_test_trials.rows()) == test_trial_stimulus_ids.size(),
          ErrorCode::ShapeMismatch, "test ids do not match test rows");
  require(x_train.allFinite() && x_test_trials.allFinite(), ErrorCode::NonFiniteValue,
          "brain responses contain non-finite values");

  std::map<std::string, std::size_t> reps;
  for (const auto& id : test_trial_stimulus_ids) ++reps[id];
  if (!reps.empty()) {
    const std::size_t expected = reps.begin()->second;
    for (const auto& [id, count] : reps)
      require(count == expected, ErrorCode::ShapeMismatch,
              "stimulus " + id + " has " + std::to_string(count) + " repetitions, expected " +
                  std::to_string(expected));
  }
  for (const auto& id : train_stimulus_ids)
    require(!reps.contains(id), ErrorCode::ShapeMismatch,
            "stimulus " + id + " appears in both train and test");
  for (const auto& mask : roi_masks)
    for (std::size_t v : mask.voxel_indices)
      require(v < n_voxels, ErrorCode::IndexOutOfRange, "ROI " + mask.name + " out of range");
}

ImageTensor::ImageTensor(int height, int width)
    : ImageTensor(height, width,
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(height) * width * kChannels)) {}

ImageTensor::ImageTensor(int height, int width, Eigen::VectorXd values)
    : height_(height), width_(width), values_(std::move(values)) {
  require(height > 0 && width > 0, ErrorCode::ShapeMismatch, "image dimensions must be positive");
  require(values_.size() == static_cast<Eigen::Index>(height) * width * kChannels,
          ErrorCode::ShapeMismatch, "image buffer size does not match dimensions");
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b))
    fail(ErrorCode::ShapeMismatch, std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                                       " vs " + std::to_string(b.height()) + "x" +
                                       std::to_string(b.width()));
}

void write_ppm(const std::filesystem::path& path, const ImageTensor& image) {
  std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) +
                    "\n255\n";
  const auto& v = image.values();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double q = std::round(std::clamp(v[i], 0.0, 1.0) * 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(q)));
  }
  write_file(path, out);
}

ImageTensor read_ppm(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P6") fail(ErrorCode::UnknownFormat, path.string() + ": not a P6 PPM");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    fail(ErrorCode::UnknownFormat, path.string() + ": bad PPM header");
  }
  if (maxval != 255 || width <= 0 || height <= 0)
    fail(ErrorCode::UnknownFormat, path.string() + ": unsupported PPM header");
  ++pos;  // single whitespace before raster
  const std::size_t n = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - pos != n) fail(ErrorCode::ShapeMismatch, path.string() + ": raster size");
  Eigen::VectorXd values(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    values[static_cast<Eigen::Index>(i)] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  return ImageTensor(height, width, std::move(values));
}

}  // namespace latentdecode
