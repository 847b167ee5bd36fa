#include "ssdlasso/errors.hpp"

namespace ssdlasso {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NotPsd: return "NotPsd";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::DegenerateSupport: return "DegenerateSupport";
        case ErrorKind::SingularCA: return "SingularCA";
        case ErrorKind::ZeroUe2: return "ZeroUe2";
        case ErrorKind::EmptySupportSet: return "EmptySupportSet";
        case ErrorKind::NonPositiveStep: return "NonPositiveStep";
        case ErrorKind::TooManySigns: return "TooManySigns";
        case ErrorKind::InvalidC: return "InvalidC";
        case ErrorKind::DegenerateK: return "DegenerateK";
        case ErrorKind::OddN: return "OddN";
        case ErrorKind::ColumnBudget: return "ColumnBudget";
        case ErrorKind::TooManyBlocks: return "TooManyBlocks";
        case ErrorKind::InfeasibleConstraints: return "InfeasibleConstraints";
        case ErrorKind::EmptyPool: return "EmptyPool";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::Parse: return "Parse";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace ssdlasso
