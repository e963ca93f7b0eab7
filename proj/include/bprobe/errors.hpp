#ifndef BPROBE_ERRORS_HPP
#define BPROBE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bprobe {

enum class ErrorCode {
    EmptyAnchorSet,
    TokenOutOfRange,
    DimensionMismatch,
    EmptyEntityList,
    EmptyEntity,
    ModelStepFailure,
    ConfigInvalid,
    DegenerateDistribution,
    NoEntitiesFound,
    EmptyResponse,
    EmptyInput,
    EmptyAfterFilter,
    ClientFailure,
    ParseFailure,
    IoFailure,
};

const char* error_code_name(ErrorCode code);

// Single exception type carrying a machine-checkable code. Call sites catch
// by code rather than by a per-code class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace bprobe

#endif  // BPROBE_ERRORS_HPP
