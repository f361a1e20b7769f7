#include "pathsg/errors.hpp"

namespace pathsg {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::NonGridShift: return "NonGridShift";
    case Errc::WindowExcludesZero: return "WindowExcludesZero";
    case Errc::PastNotStopped: return "PastNotStopped";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::EmptyInterval: return "EmptyInterval";
    case Errc::InvalidPath: return "InvalidPath";
    case Errc::NotStopped: return "NotStopped";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NotInD0Domain: return "NotInD0Domain";
    case Errc::NonFiniteState: return "NonFiniteState";
    case Errc::HorizonExceeded: return "HorizonExceeded";
    case Errc::NotPastDetermined: return "NotPastDetermined";
    case Errc::PathsDisagreeAtZero: return "PathsDisagreeAtZero";
    case Errc::UnsupportedOrder: return "UnsupportedOrder";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

} // namespace pathsg
