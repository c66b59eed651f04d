#include "market/errors.hpp"

namespace market {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::MessageTooLarge: return "MessageTooLarge";
        case Errc::DecryptFailure: return "DecryptFailure";
        case Errc::UnknownChain: return "UnknownChain";
        case Errc::UnknownContract: return "UnknownContract";
        case Errc::InsufficientBalance: return "InsufficientBalance";
        case Errc::ImplausibleSample: return "ImplausibleSample";
        case Errc::DuplicateNonce: return "DuplicateNonce";
        case Errc::CertInvalid: return "CertInvalid";
        case Errc::CertExpired: return "CertExpired";
        case Errc::CertExpiredLocally: return "CertExpiredLocally";
        case Errc::SensorTypeMismatch: return "SensorTypeMismatch";
        case Errc::DuplicateOrder: return "DuplicateOrder";
        case Errc::InvalidDD: return "InvalidDD";
        case Errc::StateError: return "StateError";
        case Errc::WrongAmount: return "WrongAmount";
        case Errc::ScoreOutOfRange: return "ScoreOutOfRange";
        case Errc::NonceMismatch: return "NonceMismatch";
        case Errc::NotFound: return "NotFound";
        case Errc::EmptyBlob: return "EmptyBlob";
        case Errc::StorageFailure: return "StorageFailure";
        case Errc::PriceMismatch: return "PriceMismatch";
        case Errc::InsufficientFunds: return "InsufficientFunds";
        case Errc::InvalidInput: return "InvalidInput";
        case Errc::ZeroPrice: return "ZeroPrice";
        case Errc::TradeIncomplete: return "TradeIncomplete";
        case Errc::ConfigParse: return "ConfigParse";
        case Errc::UnknownAttack: return "UnknownAttack";
        case Errc::InvariantViolation: return "InvariantViolation";
    }
    return "UnknownError";
}

}  // namespace market
