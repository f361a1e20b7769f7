#pragma once

#include <stdexcept>
#include <string>

namespace pathsg {

enum class Errc {
    NonGridShift,
    WindowExcludesZero,
    PastNotStopped,
    DimensionMismatch,
    KindMismatch,
    GridMismatch,
    EmptyInterval,
    InvalidPath,
    NotStopped,
    OutOfRange,
    NotInD0Domain,
    NonFiniteState,
    HorizonExceeded,
    NotPastDetermined,
    PathsDisagreeAtZero,
    UnsupportedOrder,
    InvalidArgument,
};

const char* errc_name(Errc c);

class PathError : public std::runtime_error {
public:
    PathError(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

// Raised while reading experiment configs; `pointer` is a JSON pointer into the document.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string pointer, const std::string& msg)
        : std::runtime_error("config error at '" + pointer + "': " + msg), pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

} // namespace pathsg
