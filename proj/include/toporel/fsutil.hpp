#pragma once

#include <string>

namespace toporel {

// Write-temp-then-rename so re-running a command overwrites outputs atomically.
void atomic_write_file(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace toporel
