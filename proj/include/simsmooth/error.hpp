#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace simsmooth {

using WordId = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input; line is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

class UnknownWord : public Error {
 public:
  UnknownWord(const char* side, WordId id)
      : Error(std::string("word id ") + std::to_string(id) + " outside " + side) {}
};

// A conditioning word with no training mass: P(.|w1) does not exist.
class UndefinedRow : public Error {
 public:
  explicit UndefinedRow(WordId w1)
      : Error("conditional row for w1 id " + std::to_string(w1) + " has no mass"),
        w1_(w1) {}

  WordId w1() const noexcept { return w1_; }

 private:
  WordId w1_;
};

}  // namespace simsmooth
