#ifndef MFED_ERRORS_HPP
#define MFED_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mfed {

// Closed wire error enumeration (protocol v1). Clients branch on the code,
// never on the detail string.
enum class ErrorCode : int {
    UnknownNode = 1,
    BadSecret = 2,
    NotFound = 3,
    Malformed = 4,
    Oversize = 5,
    Unauthorized = 6,
    Internal = 7,
    Conflict = 8,
};

const char* error_code_name(ErrorCode c);

class FedError : public std::runtime_error {
public:
    FedError(ErrorCode code, std::string detail)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
          code_(code),
          detail_(std::move(detail)) {}

    ErrorCode code() const { return code_; }
    const std::string& detail() const { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

inline FedError err_not_found(std::string d) { return FedError(ErrorCode::NotFound, std::move(d)); }
inline FedError err_malformed(std::string d) { return FedError(ErrorCode::Malformed, std::move(d)); }
inline FedError err_conflict(std::string d) { return FedError(ErrorCode::Conflict, std::move(d)); }
inline FedError err_internal(std::string d) { return FedError(ErrorCode::Internal, std::move(d)); }

// Domain conditions without their own wire code map onto the closed set with a
// stable detail prefix (see docs/protocol.md): ConsentMissing -> Unauthorized,
// UnknownAlgorithm / EmptyFederation -> Malformed.
inline FedError err_consent_missing(std::string d) {
    return FedError(ErrorCode::Unauthorized, "ConsentMissing: " + std::move(d));
}
inline FedError err_unknown_algorithm(std::string d) {
    return FedError(ErrorCode::Malformed, "UnknownAlgorithm: " + std::move(d));
}
inline FedError err_empty_federation(std::string d) {
    return FedError(ErrorCode::Malformed, "EmptyFederation: " + std::move(d));
}

}  // namespace mfed

#endif
