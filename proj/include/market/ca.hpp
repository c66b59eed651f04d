#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "market/crypto.hpp"

namespace market {

enum class SensorType { temperature, humidity, air_quality, traffic, energy, generic };

std::string to_string(SensorType t);
SensorType sensor_type_from_string(const std::string& s);
std::vector<SensorType> all_sensor_types();

struct PlausibilityRange {
    double lo;
    double hi;
};

/// Accept/reject range per sensor type, standing in for a data-authenticity
/// classifier. A sample is plausible iff every reading lies inside the range.
PlausibilityRange plausibility_range(SensorType t);

struct Certificate {
    std::string location_cell;
    SensorType sensor_type = SensorType::generic;
    std::uint64_t issued_at = 0;
    std::uint64_t expires_at = 0;
    crypto::Nonce seller_nonce;
    Bytes issuer_public_key;
    Bytes issuer_sig;

    /// Canonical byte serialization of all fields covered by the signature.
    Bytes signed_payload() const;

    nlohmann::json to_json() const;
    static Certificate from_json(const nlohmann::json& j);
};

struct EnrollmentRequest {
    std::string claimed_location;
    SensorType sensor_type = SensorType::generic;
    std::vector<double> sample_data;
    crypto::Nonce nonce;
};

/// A pool of certificate issuers with a shared seen-nonce registry. Issuance
/// round-robins across issuer keys; the broker trusts the whole key set.
class CertificateAuthority {
public:
    CertificateAuthority(Rng& rng, std::size_t n_issuers = 3);

    /// Throws ImplausibleSample or DuplicateNonce.
    Certificate issue_certificate(const EnrollmentRequest& req, std::uint64_t now,
                                  std::uint64_t validity);

    std::vector<Bytes> issuer_public_keys() const;

private:
    std::vector<crypto::SignKeyPair> issuers_;
    std::set<crypto::Nonce> seen_nonces_;
    std::size_t next_issuer_ = 0;
};

/// True iff the signature verifies under one of the trusted issuer keys, the
/// certificate has not expired at `now`, and (when given) the embedded nonce
/// matches `expected_nonce`. Never throws.
bool verify_certificate(const Certificate& cert, std::span<const Bytes> trusted_issuers,
                        std::uint64_t now,
                        const std::optional<crypto::Nonce>& expected_nonce = std::nullopt);

}  // namespace market
