#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace seupred {

/// Base class for all errors raised by this library. Errors that indicate
/// bad user input derive from ValidationError; environment/runtime problems
/// derive from RuntimeFailure. The CLI maps these to exit codes 1 and 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

// --- netlist ---

class SyntaxError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MultipleDrivers : public ValidationError {
 public:
  explicit MultipleDrivers(const std::string& net)
      : ValidationError("net '" + net + "' has multiple drivers"), net(net) {}
  std::string net;
};

class CombinationalLoop : public ValidationError {
 public:
  explicit CombinationalLoop(const std::vector<std::string>& path);
  std::vector<std::string> cycle_path;
};

class UnknownGateType : public ValidationError {
 public:
  explicit UnknownGateType(const std::string& type)
      : ValidationError("unknown gate type '" + type + "'"), type(type) {}
  std::string type;
};

class ArityMismatch : public ValidationError {
 public:
  ArityMismatch(const std::string& cell, int expected, int got)
      : ValidationError("cell '" + cell + "' expects " + std::to_string(expected) +
                        " input(s), got " + std::to_string(got)),
        cell(cell) {}
  std::string cell;
};

// --- faultsim ---

class SiteOutOfRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ShapeMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

// --- waveform ---

class VcdSyntaxError : public ValidationError {
 public:
  VcdSyntaxError(int line, const std::string& msg)
      : ValidationError("vcd line " + std::to_string(line) + ": " + msg), line(line) {}
  int line;
};

class MissingSignal : public ValidationError {
 public:
  explicit MissingSignal(const std::string& name)
      : ValidationError("signal '" + name + "' not found in VCD"), name(name) {}
  std::string name;
};

class NonBinaryValue : public ValidationError {
 public:
  NonBinaryValue(const std::string& signal, long long time)
      : ValidationError("signal '" + signal + "' is non-binary at time " +
                        std::to_string(time)),
        signal(signal),
        time(time) {}
  std::string signal;
  long long time;
};

class WindowOutOfRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// --- dataset ---

class NodeCountMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingLabels : public ValidationError {
 public:
  explicit MissingLabels(int t_seu)
      : ValidationError("no labels for injection time " + std::to_string(t_seu)),
        t_seu(t_seu) {}
  int t_seu;
};

class ManifestMismatch : public ValidationError {
 public:
  ManifestMismatch(const std::string& file, long long expected, long long actual)
      : ValidationError("file '" + file + "': manifest expects " +
                        std::to_string(expected) + " bytes, found " +
                        std::to_string(actual)),
        file(file),
        expected(expected),
        actual(actual) {}
  explicit ManifestMismatch(const std::string& msg) : ValidationError(msg) {}
  std::string file;
  long long expected = 0;
  long long actual = 0;
};

class GraphHashMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// --- nn / models / trainer ---

class EmptyMask : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class WindowTooSmall : public ValidationError {
 public:
  WindowTooSmall(long long required, long long got)
      : ValidationError("temporal window too small: need " + std::to_string(required) +
                        ", got " + std::to_string(got)),
        required(required),
        got(got) {}
  long long required;
  long long got;
};

class SpecInvalid : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class Divergence : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace seupred
