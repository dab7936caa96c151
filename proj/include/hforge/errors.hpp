#pragma once

#include <stdexcept>
#include <string>

namespace hforge {

// Base for every domain error raised by the library. The CLI maps these to
// exit code 1; UsageError-derived failures map to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
  using Error::Error;
};

// Unknown game id.
class RegistryError : public Error {
  using Error::Error;
};

// Operation invoked in a state that forbids it (e.g. step on a finished game).
class UsageError : public Error {
  using Error::Error;
};

class ParseError : public Error {
  using Error::Error;
};

// No fenced code block in a model response.
class ExtractionError : public Error {
  using Error::Error;
};

// Fenced block present but a required function name is missing.
class SignatureError : public Error {
  using Error::Error;
};

class TransportError : public Error {
  using Error::Error;
};

class ProviderError : public Error {
 public:
  ProviderError(int status, const std::string& what)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

// Both the LLM path and the guest fallback failed to produce an action.
class HarnessFailure : public Error {
 public:
  HarnessFailure(const std::string& what, std::string traceback = {})
      : Error(what), traceback_(std::move(traceback)) {}
  const std::string& traceback() const noexcept { return traceback_; }

 private:
  std::string traceback_;
};

// Executor sessions that cannot be started; distinct from guest failures.
class InfrastructureError : public Error {
  using Error::Error;
};

class IntegrityError : public Error {
  using Error::Error;
};

class FilesystemError : public Error {
  using Error::Error;
};

}  // namespace hforge
