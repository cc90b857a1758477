#pragma once

#include <stdexcept>
#include <string>

namespace tkmx {

// Base for every error raised by the toolkit. The CLI maps ConfigError to
// exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ExtensionError : public Error {
public:
    ExtensionError(const std::string& what, std::size_t minted)
        : Error(what), minted_(minted) {}
    std::size_t minted() const noexcept { return minted_; }

private:
    std::size_t minted_;
};

class AuditError : public Error {
public:
    using Error::Error;
};

} // namespace tkmx
