#pragma once

#include <string>

namespace puner {

// Writes content to path via a temporary file plus rename, so readers never
// observe a partially written file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

bool file_exists(const std::string& path);

}  // namespace puner
