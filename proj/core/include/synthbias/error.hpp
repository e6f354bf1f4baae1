#pragma once

#include <stdexcept>
#include <string>

namespace synthbias {

// Root of every error the library throws. The CLI maps subclasses onto exit
// codes (see tools/main.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Lexicon content that parses but breaks an invariant (e.g. an occupation in
// both lists).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed lexicon/config/corpus file. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Remote generation failed after all retries. `http_status` is 0 when the
// failure happened below HTTP (connection refused, timeout).
class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, int http_status)
      : Error(what), http_status_(http_status) {}
  int http_status() const { return http_status_; }

 private:
  int http_status_;
};

class EmbeddingError : public Error {
 public:
  using Error::Error;
};

class StrategyError : public Error {
 public:
  using Error::Error;
};

// A metric whose denominator is empty (the stereotype rate of a corpus without
// gendered instructions).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class TrainingDataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Missing or inconsistent persisted data (unknown run, incomplete run,
// missing baseline).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace synthbias
