#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace narseg {

// Malformed input text. line() is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, std::size_t line = 0, std::string file = {})
      : std::runtime_error(format(msg, line, file)), message_(msg), line_(line), file_(std::move(file)) {}

  // The message without the file/line prefix.
  const std::string& message() const { return message_; }
  std::size_t line() const { return line_; }
  const std::string& file() const { return file_; }

private:
  static std::string format(const std::string& msg, std::size_t line, const std::string& file) {
    std::string out;
    if (!file.empty()) out += file + ":";
    if (line > 0) out += std::to_string(line) + ":";
    if (!out.empty()) out += " ";
    return out + msg;
  }

  std::string message_;
  std::size_t line_;
  std::string file_;
};

// Records or trees that do not fit the feature schema.
class SchemaError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment or learner configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace narseg
