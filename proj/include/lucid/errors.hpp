#pragma once

#include <stdexcept>
#include <string>

namespace lucid {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Engine or file misconfiguration: unbound role, bad config file, spec/store mismatch.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Request violates a backend's declared capabilities (e.g. temperature above the
// cap). Non-retryable by definition.
class CapabilityError : public Error {
public:
    using Error::Error;
};

// Network-level failure talking to a backend. Retryable.
class TransportError : public Error {
public:
    using Error::Error;
};

// Backend answered but the answer is unusable (non-retryable protocol error,
// empty completion after retries, embedding dimension drift).
class BackendError : public Error {
public:
    using Error::Error;
};

// Run-log I/O and integrity failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lucid
