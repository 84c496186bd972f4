// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string_view>

namespace umod {

using LogSink = std::function<void(std::string_view)>;

/// Replaces the warning sink (stderr by default). Pass nullptr to restore it.
void set_warning_sink(LogSink sink);
void log_warning(std::string_view message);

}  // namespace umod
