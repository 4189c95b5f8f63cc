#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uavfl {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidFleetError : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

class MatrixValidationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class LinkInfeasibleError : public Error {
 public:
  using Error::Error;
};

class PlanValidationError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

/// Configuration problem; `key_path()` names the offending entry (e.g. "plan.lr").
class ConfigError : public Error {
 public:
  ConfigError(std::string key_path, const std::string& what)
      : Error(key_path.empty() ? what : key_path + ": " + what), key_path_(std::move(key_path)) {}
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

class SinkError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during local training.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int drone, int round, const std::string& what)
      : Error("training diverged (drone " + std::to_string(drone) + ", round " +
              std::to_string(round) + "): " + what),
        drone_(drone),
        round_(round) {}
  int drone() const noexcept { return drone_; }
  int round() const noexcept { return round_; }

 private:
  int drone_;
  int round_;
};

}  // namespace uavfl
