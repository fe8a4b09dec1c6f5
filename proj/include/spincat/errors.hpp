#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace spincat {

// Argument/precondition violations (CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical or physics failures (CLI exit code 3).
class PhysicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

class InstabilityError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

class ResolutionError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

class FitError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

class TruncationError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

class DivergentCatTime : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

class CatNotFound : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

// File system failures (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 2 argument, 3 physics, 4 I/O.
inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const std::invalid_argument*>(&e)) return 2;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return 4;
  return 3;
}

}  // namespace spincat
