#include "netrca/error.hpp"

namespace netrca {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedInput: return "MalformedInput";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::DegenerateChannel: return "DegenerateChannel";
        case ErrorKind::InvalidWindow: return "InvalidWindow";
        case ErrorKind::NoInvariantsFound: return "NoInvariantsFound";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::UndefinedMetric: return "UndefinedMetric";
        case ErrorKind::ChannelMismatch: return "ChannelMismatch";
        case ErrorKind::MissingInput: return "MissingInput";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

}  // namespace netrca
