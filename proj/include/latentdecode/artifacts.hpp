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

#ifndef LATENTDECODE_ARTIFACTS_HPP
#define LATENTDECODE_ARTIFACTS_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace latentdecode {

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Exclusive lock on an output directory, held for the lifetime of the object.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

/// Stages a command's outputs in a hidden directory and moves them into the
/// output directory only on commit(). Uncommitted stages are deleted, so a
/// failed run leaves no partial files behind.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path output_dir, std::string command);
  ~ArtifactWriter();
  ArtifactWriter(const ArtifactWriter&) = delete;
  ArtifactWriter& operator=(const ArtifactWriter&) = delete;

  /// Staging location for `relative`; parent directories are created.
  std::filesystem::path stage(const std::string& relative);

  /// Writes text to a staged file.
  void write_text(const std::string& relative, const std::string& text);

  /// Moves staged files into place and writes `manifest_<command>.txt`
  /// listing every file with its SHA-256. Returns the manifest's own hash.
  std::string commit(const std::vector<std::pair<std::string, std::string>>& header);

  const std::filesystem::path& output_dir() const { return output_dir_; }

 private:
  std::filesystem::path output_dir_;
  std::filesystem::path staging_;
  std::string command_;
  bool committed_ = false;
};

}  // namespace latentdecode

#endif  // LATENTDECODE_ARTIFACTS_HPP
