#pragma once

#include <stdexcept>
#include <string>

namespace kgrag {

// Root of every error the engine raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IngestError : public Error {
public:
    IngestError(std::string path, const std::string& what)
        : Error(what + ": " + path), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class EncodingError : public Error {
public:
    using Error::Error;
};

// Caller broke a documented precondition (e.g. dimension mismatch).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConfigurationError : public Error {
public:
    using Error::Error;
};

class InvalidTransition : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class PipelineError : public Error {
public:
    using Error::Error;
};

// Failure talking to an embedding or LLM backend. status is the HTTP status
// when one was received, 0 for transport failures.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, int status, int attempts = 1)
        : Error(what), status_(status), attempts_(attempts) {}
    int status() const noexcept { return status_; }
    int attempts() const noexcept { return attempts_; }

private:
    int status_;
    int attempts_;
};

}  // namespace kgrag
