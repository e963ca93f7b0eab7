#include "bprobe/errors.hpp"

namespace bprobe {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyAnchorSet: return "empty anchor set";
        case ErrorCode::TokenOutOfRange: return "token out of range";
        case ErrorCode::DimensionMismatch: return "dimension mismatch";
        case ErrorCode::EmptyEntityList: return "empty entity list";
        case ErrorCode::EmptyEntity: return "empty entity";
        case ErrorCode::ModelStepFailure: return "model step failure";
        case ErrorCode::ConfigInvalid: return "config invalid";
        case ErrorCode::DegenerateDistribution: return "degenerate distribution";
        case ErrorCode::NoEntitiesFound: return "no entities found";
        case ErrorCode::EmptyResponse: return "empty response";
        case ErrorCode::EmptyInput: return "empty input";
        case ErrorCode::EmptyAfterFilter: return "empty after filter";
        case ErrorCode::ClientFailure: return "client failure";
        case ErrorCode::ParseFailure: return "parse failure";
        case ErrorCode::IoFailure: return "io failure";
    }
    return "unknown error";
}

}  // namespace bprobe
