#include "nlobs/error.hpp"

namespace nlobs {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::parameter: return "parameter error";
        case ErrorKind::shape: return "shape error";
        case ErrorKind::mode: return "mode error";
        case ErrorKind::unsupported: return "unsupported regime";
        case ErrorKind::geometry: return "geometry error";
        case ErrorKind::convergence: return "convergence error";
        case ErrorKind::stability: return "stability error";
        case ErrorKind::step: return "step error";
        case ErrorKind::domain: return "domain error";
        case ErrorKind::fit: return "fit error";
        case ErrorKind::assembly: return "assembly error";
        case ErrorKind::config: return "config error";
        case ErrorKind::missing_artifact: return "missing artifact";
        case ErrorKind::io: return "io error";
    }
    return "error";
}

}  // namespace nlobs
