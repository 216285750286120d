#pragma once

#include <stdexcept>
#include <string>

namespace dring {

// File access and parse failures; the CLI maps these to exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace dring
