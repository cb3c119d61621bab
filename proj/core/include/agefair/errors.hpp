#pragma once

#include <stdexcept>
#include <string>

namespace agefair {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NoParticipantsError : public Error {
 public:
  using Error::Error;
};

class DegenerateIntervalError : public Error {
 public:
  using Error::Error;
};

class InvalidActionError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

// Checkpoint parse failures and topology mismatches.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// A checkpoint whose network shape differs from the configured one.
class TopologyMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

}  // namespace agefair
