#include "market/ca.hpp"

#include "market/errors.hpp"

namespace market {

std::string to_string(SensorType t) {
    switch (t) {
        case SensorType::temperature: return "temperature";
        case SensorType::humidity: return "humidity";
        case SensorType::air_quality: return "air_quality";
        case SensorType::traffic: return "traffic";
        case SensorType::energy: return "energy";
        case SensorType::generic: return "generic";
    }
    return "generic";
}

SensorType sensor_type_from_string(const std::string& s) {
    for (SensorType t : all_sensor_types())
        if (to_string(t) == s) return t;
    throw MarketError(Errc::ConfigParse, "unknown sensor type: " + s);
}

std::vector<SensorType> all_sensor_types() {
    return {SensorType::temperature, SensorType::humidity, SensorType::air_quality,
            SensorType::traffic,     SensorType::energy,   SensorType::generic};
}

PlausibilityRange plausibility_range(SensorType t) {
    switch (t) {
        case SensorType::temperature: return {-40.0, 60.0};
        case SensorType::humidity: return {0.0, 100.0};
        case SensorType::air_quality: return {0.0, 500.0};
        case SensorType::traffic: return {0.0, 10000.0};
        case SensorType::energy: return {0.0, 100000.0};
        case SensorType::generic: return {-1e9, 1e9};
    }
    return {-1e9, 1e9};
}

Bytes Certificate::signed_payload() const {
    nlohmann::json j{
        {"location_cell", location_cell},
        {"sensor_type", market::to_string(sensor_type)},
        {"issued_at", issued_at},
        {"expires_at", expires_at},
        {"seller_nonce", seller_nonce.hex()},
        {"issuer", to_hex(issuer_public_key)},
    };
    return to_bytes(j.dump());
}

nlohmann::json Certificate::to_json() const {
    return nlohmann::json{
        {"location_cell", location_cell},
        {"sensor_type", market::to_string(sensor_type)},
        {"issued_at", issued_at},
        {"expires_at", expires_at},
        {"seller_nonce", seller_nonce.hex()},
        {"issuer_public_key", to_hex(issuer_public_key)},
        {"issuer_sig", to_hex(issuer_sig)},
    };
}

Certificate Certificate::from_json(const nlohmann::json& j) {
    Certificate c;
    c.location_cell = j.at("location_cell").get<std::string>();
    c.sensor_type = sensor_type_from_string(j.at("sensor_type").get<std::string>());
    c.issued_at = j.at("issued_at").get<std::uint64_t>();
    c.expires_at = j.at("expires_at").get<std::uint64_t>();
    c.seller_nonce = crypto::Nonce::from_hex(j.at("seller_nonce").get<std::string>());
    c.issuer_public_key = from_hex(j.at("issuer_public_key").get<std::string>());
    c.issuer_sig = from_hex(j.at("issuer_sig").get<std::string>());
    return c;
}

CertificateAuthority::CertificateAuthority(Rng& rng, std::size_t n_issuers) {
    if (n_issuers == 0) n_issuers = 1;
    for (std::size_t i = 0; i < n_issuers; ++i) issuers_.push_back(crypto::sign_keygen(rng));
}

Certificate CertificateAuthority::issue_certificate(const EnrollmentRequest& req,
                                                    std::uint64_t now, std::uint64_t validity) {
    if (req.sample_data.empty())
        throw MarketError(Errc::ImplausibleSample, "empty sample");
    PlausibilityRange range = plausibility_range(req.sensor_type);
    for (double v : req.sample_data)
        if (v < range.lo || v > range.hi)
            throw MarketError(Errc::ImplausibleSample,
                              "reading " + std::to_string(v) + " outside range for " +
                                  market::to_string(req.sensor_type));
    if (!seen_nonces_.insert(req.nonce).second)
        throw MarketError(Errc::DuplicateNonce, "enrollment nonce already seen");
    if (validity == 0) throw MarketError(Errc::InvalidInput, "validity must be positive");

    const crypto::SignKeyPair& issuer = issuers_[next_issuer_];
    next_issuer_ = (next_issuer_ + 1) % issuers_.size();

    Certificate cert;
    cert.location_cell = req.claimed_location;
    cert.sensor_type = req.sensor_type;
    cert.issued_at = now;
    cert.expires_at = now + validity;
    cert.seller_nonce = req.nonce;
    cert.issuer_public_key = issuer.public_key;
    cert.issuer_sig = crypto::sign(issuer.secret_key, cert.signed_payload());
    return cert;
}

std::vector<Bytes> CertificateAuthority::issuer_public_keys() const {
    std::vector<Bytes> keys;
    for (const auto& kp : issuers_) keys.push_back(kp.public_key);
    return keys;
}

bool verify_certificate(const Certificate& cert, std::span<const Bytes> trusted_issuers,
                        std::uint64_t now, const std::optional<crypto::Nonce>& expected_nonce) {
    if (cert.expires_at <= cert.issued_at) return false;
    if (now >= cert.expires_at) return false;
    if (expected_nonce && cert.seller_nonce != *expected_nonce) return false;
    bool trusted = false;
    for (const Bytes& pk : trusted_issuers)
        if (pk == cert.issuer_public_key) trusted = true;
    if (!trusted) return false;
    return crypto::verify(cert.issuer_public_key, cert.signed_payload(), cert.issuer_sig);
}

}  // namespace market
