#include "market/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>

#include "market/errors.hpp"

namespace market::crypto {

namespace {

constexpr std::size_t kLenFrame = 8;  // little-endian plaintext length prefix

void put_u64(Bytes& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

Bytes seed32(Rng& rng) { return rng.bytes(32); }

}  // namespace

void init() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
    });
}

Nonce Nonce::from_hex(std::string_view h) {
    Bytes b = market::from_hex(h);
    if (b.size() != 16) throw std::invalid_argument("nonce must be 16 bytes");
    Nonce n;
    std::memcpy(n.value.data(), b.data(), 16);
    return n;
}

SymmetricKey SymmetricKey::from_hex(std::string_view h) {
    Bytes b = market::from_hex(h);
    if (b.size() != 32) throw std::invalid_argument("symmetric key must be 32 bytes");
    SymmetricKey k;
    std::memcpy(k.key.data(), b.data(), 32);
    return k;
}

std::size_t hybrid_overhead() { return crypto_box_SEALBYTES + kLenFrame; }

KeyPair keygen(Rng& rng) {
    init();
    Bytes seed = seed32(rng);
    KeyPair kp;
    kp.public_key.resize(crypto_box_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_box_SECRETKEYBYTES);
    crypto_box_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

SignKeyPair sign_keygen(Rng& rng) {
    init();
    Bytes seed = seed32(rng);
    SignKeyPair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

Nonce make_nonce(Rng& rng) {
    Nonce n;
    Bytes b = rng.bytes(n.value.size());
    std::memcpy(n.value.data(), b.data(), n.value.size());
    return n;
}

SymmetricKey make_symmetric_key(Rng& rng) {
    SymmetricKey k;
    Bytes b = rng.bytes(k.key.size());
    std::memcpy(k.key.data(), b.data(), k.key.size());
    return k;
}

Ciphertext hybrid_encrypt(const Bytes& recipient_public, std::span<const std::uint8_t> m,
                          const std::vector<std::size_t>& buckets) {
    init();
    if (recipient_public.size() != crypto_box_PUBLICKEYBYTES)
        throw MarketError(Errc::InvalidInput, "bad public key length");

    Bytes framed;
    framed.reserve(kLenFrame + m.size());
    put_u64(framed, m.size());
    framed.insert(framed.end(), m.begin(), m.end());

    if (!buckets.empty()) {
        std::size_t needed = m.size() + hybrid_overhead();
        std::size_t chosen = 0;
        for (std::size_t b : buckets)
            if (b >= needed && (chosen == 0 || b < chosen)) chosen = b;
        if (chosen == 0)
            throw MarketError(Errc::MessageTooLarge,
                              "no padding bucket fits message of " + std::to_string(m.size()) +
                                  " bytes");
        framed.resize(chosen - crypto_box_SEALBYTES, 0);
    }

    Ciphertext c;
    c.blob.resize(framed.size() + crypto_box_SEALBYTES);
    crypto_box_seal(c.blob.data(), framed.data(), framed.size(), recipient_public.data());
    c.padded_len = c.blob.size();
    return c;
}

Bytes hybrid_decrypt(const KeyPair& recipient, const Ciphertext& c) {
    init();
    if (c.blob.size() < crypto_box_SEALBYTES + kLenFrame)
        throw MarketError(Errc::DecryptFailure, "ciphertext too short");
    Bytes framed(c.blob.size() - crypto_box_SEALBYTES);
    if (crypto_box_seal_open(framed.data(), c.blob.data(), c.blob.size(),
                             recipient.public_key.data(), recipient.secret_key.data()) != 0)
        throw MarketError(Errc::DecryptFailure, "sealed box open failed");
    std::uint64_t len = read_u64(framed.data());
    if (len > framed.size() - kLenFrame)
        throw MarketError(Errc::DecryptFailure, "corrupt length frame");
    return Bytes(framed.begin() + kLenFrame, framed.begin() + kLenFrame + len);
}

Bytes sym_encrypt(const SymmetricKey& k, std::span<const std::uint8_t> m) {
    init();
    Bytes out(crypto_secretbox_NONCEBYTES + m.size() + crypto_secretbox_MACBYTES);
    randombytes_buf(out.data(), crypto_secretbox_NONCEBYTES);
    crypto_secretbox_easy(out.data() + crypto_secretbox_NONCEBYTES, m.data(), m.size(),
                          out.data(), k.key.data());
    return out;
}

Bytes sym_decrypt(const SymmetricKey& k, std::span<const std::uint8_t> c) {
    init();
    if (c.size() < crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES)
        throw MarketError(Errc::DecryptFailure, "ciphertext too short");
    Bytes out(c.size() - crypto_secretbox_NONCEBYTES - crypto_secretbox_MACBYTES);
    if (crypto_secretbox_open_easy(out.data(), c.data() + crypto_secretbox_NONCEBYTES,
                                   c.size() - crypto_secretbox_NONCEBYTES, c.data(),
                                   k.key.data()) != 0)
        throw MarketError(Errc::DecryptFailure, "secretbox open failed");
    return out;
}

Bytes sign(const Bytes& secret_key, std::span<const std::uint8_t> m) {
    init();
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, m.data(), m.size(), secret_key.data());
    return sig;
}

bool verify(const Bytes& public_key, std::span<const std::uint8_t> m, const Bytes& sig) {
    init();
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES || sig.size() != crypto_sign_BYTES)
        return false;
    return crypto_sign_verify_detached(sig.data(), m.data(), m.size(), public_key.data()) == 0;
}

}  // namespace market::crypto
