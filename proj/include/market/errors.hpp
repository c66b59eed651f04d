#pragma once

#include <stdexcept>
#include <string>

namespace market {

enum class Errc {
    MessageTooLarge,
    DecryptFailure,
    UnknownChain,
    UnknownContract,
    InsufficientBalance,
    ImplausibleSample,
    DuplicateNonce,
    CertInvalid,
    CertExpired,
    CertExpiredLocally,
    SensorTypeMismatch,
    DuplicateOrder,
    InvalidDD,
    StateError,
    WrongAmount,
    ScoreOutOfRange,
    NonceMismatch,
    NotFound,
    EmptyBlob,
    StorageFailure,
    PriceMismatch,
    InsufficientFunds,
    InvalidInput,
    ZeroPrice,
    TradeIncomplete,
    ConfigParse,
    UnknownAttack,
    InvariantViolation,
};

const char* errc_name(Errc code);

class MarketError : public std::runtime_error {
public:
    MarketError(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

}  // namespace market
