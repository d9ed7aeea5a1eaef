#pragma once

#include <stdexcept>
#include <string>

namespace voxkit {

// Failure taxonomy. Every exception thrown by this library derives from
// Error and carries one of these classes; the command line tool maps them
// onto its exit codes.
enum class ErrorClass {
    invalid_input,    // parameter or shape violates a documented precondition
    format,           // container or manifest is structurally malformed
    unsupported_mode, // well-formed container, but a variant we do not handle
    corruption,       // container is well-formed but internally inconsistent
    io,               // the operating system refused a read or write
    numerical,        // a numeric consistency check failed
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what_arg)
        : std::runtime_error(what_arg), cls_(cls) {}

    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

struct InvalidInputError : Error {
    explicit InvalidInputError(const std::string& what_arg)
        : Error(ErrorClass::invalid_input, what_arg) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& what_arg)
        : Error(ErrorClass::format, what_arg) {}
};

struct UnsupportedModeError : Error {
    explicit UnsupportedModeError(const std::string& what_arg)
        : Error(ErrorClass::unsupported_mode, what_arg) {}
};

struct CorruptionError : Error {
    explicit CorruptionError(const std::string& what_arg)
        : Error(ErrorClass::corruption, what_arg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what_arg)
        : Error(ErrorClass::io, what_arg) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what_arg)
        : Error(ErrorClass::numerical, what_arg) {}
};

} // namespace voxkit
