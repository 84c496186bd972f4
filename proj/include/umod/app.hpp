// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

// Command layer: JSON-configured runs that write `config.lock.json` next to
// their outputs. The C API and the command-line tool are thin wrappers.

#pragma once

#include <json.hpp>

#include <filesystem>
#include <string_view>
#include <vector>

namespace umod::app {

/// Commands: gen-data, train, eval, export-embeddings, plot-loss, shift.
const std::vector<std::string_view>& commands();

/// Fills every default so the result fully describes the run. Throws
/// ErrorKind::Config on an unknown command, unknown key or invalid value.
nlohmann::ordered_json resolve_config(std::string_view command, const nlohmann::json& config);

/// Resolves, writes the lock file and runs. Returns a JSON summary.
nlohmann::ordered_json run_command(std::string_view command, const nlohmann::json& config);

/// {"command": ..., "config": ...}
void write_lock(const std::filesystem::path& dir, std::string_view command,
                const nlohmann::ordered_json& resolved);

/// Reads a lock file; returns its command and config.
std::pair<std::string, nlohmann::json> read_lock(const std::filesystem::path& path);

}  // namespace umod::app
