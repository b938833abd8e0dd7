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

// latentdecode: command-line front end.
//
//   latentdecode <extract|fit|decode|evaluate|roi|synthetic> --config PATH
//                [--output DIR] [--threads N] [--verbose]

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "latentdecode/commands.hpp"
#include "latentdecode/config.hpp"
#include "latentdecode/error.hpp"

namespace {

// One line, key=value pairs, message last and quoted.
void report_error(std::string_view kind, std::string_view code, const std::string& message) {
  std::string escaped;
  for (char ch : message) {
    if (ch == '"' || ch == '\\') escaped += '\\';
    escaped += (ch == '\n' ? ' ' : ch);
  }
  std::cerr << "error kind=" << kind << " code=" << code << " message=\"" << escaped << "\"\n";
}

int default_threads() {
  if (const char* env = std::getenv("LATENTDECODE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    latentdecode::fail(latentdecode::ErrorCode::ConfigError,
                       std::string("LATENTDECODE_THREADS must be a positive integer, got ") + env);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  using namespace latentdecode;
  CLI::App app{"Latent decoding toolkit"};
  app.require_subcommand(1, 1);

  std::string config_path, output_dir;
  int threads = 0;
  bool verbose = false;
  for (const auto name : {"extract", "fit", "decode", "evaluate", "roi", "synthetic"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " stage");
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--output", output_dir, "output directory (overrides the config)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", verbose, "progress on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("config", "UsageError", e.what());
    return static_cast<int>(ErrorClass::Config);
  }

  const Command command = *parse_command(app.get_subcommands().front()->get_name());
  try {
    ExperimentConfig config = load_experiment_config(config_path);
    if (!output_dir.empty()) config.output_dir = output_dir;
    config.set_threads(threads > 0 ? threads : default_threads());
    RunOptions options;
    if (verbose) options.log = &std::cerr;
    const CommandResult result = run_command(command, config, options);
    std::cout << result.manifest.string() << ' ' << result.manifest_hash << '\n';
    return 0;
  } catch (const Error& e) {
    const ErrorClass cls = classify(e.code());
    const char* kind = cls == ErrorClass::Config ? "config" : cls == ErrorClass::Data ? "data" : "numeric";
    report_error(kind, to_string(e.code()), e.detail());
    return static_cast<int>(cls);
  } catch (const std::filesystem::filesystem_error& e) {
    report_error("data", "IoFailure", e.what());
    return static_cast<int>(ErrorClass::Data);
  }
}
