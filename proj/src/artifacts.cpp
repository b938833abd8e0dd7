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

#include "latentdecode/artifacts.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include "latentdecode/error.hpp"

namespace latentdecode {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::IoFailure, "SHA-256 computation failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

DirectoryLock::DirectoryLock(const fs::path& dir) : lock_path_(dir / ".lock") {
  fs::create_directories(dir);
  const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    fail(ErrorCode::ConfigError, "output directory " + dir.string() + " is locked by another run");
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(lock_path_, ec);
}

ArtifactWriter::ArtifactWriter(fs::path output_dir, std::string command)
    : output_dir_(std::move(output_dir)),
      staging_(output_dir_ / (".staging_" + command)),
      command_(std::move(command)) {
  std::error_code ec;
  fs::remove_all(staging_, ec);
  fs::create_directories(staging_);
}

ArtifactWriter::~ArtifactWriter() {
  std::error_code ec;
  fs::remove_all(staging_, ec);
}

fs::path ArtifactWriter::stage(const std::string& relative) {
  const fs::path p = staging_ / relative;
  fs::create_directories(p.parent_path());
  return p;
}

void ArtifactWriter::write_text(const std::string& relative, const std::string& text) {
  std::ofstream out(stage(relative), std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + relative);
  out << text;
}

std::string ArtifactWriter::commit(const std::vector<std::pair<std::string, std::string>>& header) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(staging_))
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), staging_).generic_string());
  std::sort(files.begin(), files.end());

  std::string manifest = "command = " + command_ + "\n";
  for (const auto& [k, v] : header) manifest += k + " = " + v + "\n";
  for (const auto& f : files) manifest += "file " + f + " " + sha256_file(staging_ / f) + "\n";

  for (const auto& f : files) {
    const fs::path dst = output_dir_ / f;
    fs::create_directories(dst.parent_path());
    fs::rename(staging_ / f, dst);
  }
  std::ofstream out(output_dir_ / ("manifest_" + command_ + ".txt"), std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write manifest");
  out << manifest;
  committed_ = true;
  return sha256_hex(manifest);
}

}  // namespace latentdecode
