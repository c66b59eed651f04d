#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "market/bytes.hpp"
#include "market/rng.hpp"

namespace market::crypto {

/// Must be called once per process before any other function here.
void init();

struct KeyPair {
    Bytes public_key;
    Bytes secret_key;
};

struct SignKeyPair {
    Bytes public_key;
    Bytes secret_key;
};

struct Nonce {
    std::array<std::uint8_t, 16> value{};

    auto operator<=>(const Nonce&) const = default;
    std::string hex() const { return to_hex(value); }
    static Nonce from_hex(std::string_view h);
};

struct SymmetricKey {
    std::array<std::uint8_t, 32> key{};

    auto operator<=>(const SymmetricKey&) const = default;
    std::string hex() const { return to_hex(key); }
    static SymmetricKey from_hex(std::string_view h);
};

struct Ciphertext {
    Bytes blob;
    std::size_t padded_len = 0;  // == blob.size()
};

/// Fixed per-message overhead of hybrid_encrypt: sealed-box bytes plus the
/// plaintext length frame. A bucket must be at least m.size() + overhead.
std::size_t hybrid_overhead();

KeyPair keygen(Rng& rng);
SignKeyPair sign_keygen(Rng& rng);
Nonce make_nonce(Rng& rng);
SymmetricKey make_symmetric_key(Rng& rng);

/// Authenticated public-key encryption, padded up to the smallest bucket that
/// fits. An empty bucket list disables padding (ciphertext is minimal size).
/// Throws MessageTooLarge when no bucket fits.
Ciphertext hybrid_encrypt(const Bytes& recipient_public, std::span<const std::uint8_t> m,
                          const std::vector<std::size_t>& buckets);

/// Inverse of hybrid_encrypt; strips padding. Throws DecryptFailure on key
/// mismatch or any tampering.
Bytes hybrid_decrypt(const KeyPair& recipient, const Ciphertext& c);

/// Authenticated symmetric encryption (random nonce prepended).
Bytes sym_encrypt(const SymmetricKey& k, std::span<const std::uint8_t> m);
Bytes sym_decrypt(const SymmetricKey& k, std::span<const std::uint8_t> c);

Bytes sign(const Bytes& secret_key, std::span<const std::uint8_t> m);
bool verify(const Bytes& public_key, std::span<const std::uint8_t> m, const Bytes& sig);

}  // namespace market::crypto
