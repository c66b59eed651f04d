#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "market/crypto.hpp"
#include "market/errors.hpp"

using namespace market;

namespace {

struct SodiumInit {
    SodiumInit() { crypto::init(); }
} sodium_init;

const std::vector<std::size_t> kBuckets{256, 1024, 4096, 65536};

Bytes random_bytes(Rng& rng, std::size_t n) { return rng.bytes(n); }

}  // namespace

TEST_CASE("keygen is deterministic in the rng seed") {
    Rng a(42), b(42), c(43);
    CHECK(crypto::keygen(a).public_key == crypto::keygen(b).public_key);
    CHECK(crypto::keygen(a).secret_key == crypto::keygen(b).secret_key);
    Rng a2(42);
    CHECK(crypto::keygen(a2).public_key != crypto::keygen(c).public_key);
}

TEST_CASE("hybrid overhead is the sealed-box size plus the length frame") {
    CHECK(crypto::hybrid_overhead() == 56);
}

TEST_CASE("a 100-byte message pads into the 256 bucket exactly") {
    Rng rng(1);
    crypto::KeyPair kp = crypto::keygen(rng);
    Bytes m = random_bytes(rng, 100);
    crypto::Ciphertext c = crypto::hybrid_encrypt(kp.public_key, m, kBuckets);
    CHECK(c.blob.size() == 256);
    CHECK(c.padded_len == 256);
    CHECK(crypto::hybrid_decrypt(kp, c) == m);
}

TEST_CASE("bucket selection picks the smallest fitting bucket") {
    Rng rng(2);
    crypto::KeyPair kp = crypto::keygen(rng);
    // 256 - 56 = 200 is the largest payload for the first bucket.
    CHECK(crypto::hybrid_encrypt(kp.public_key, random_bytes(rng, 200), kBuckets).blob.size() ==
          256);
    CHECK(crypto::hybrid_encrypt(kp.public_key, random_bytes(rng, 201), kBuckets).blob.size() ==
          1024);
    CHECK(crypto::hybrid_encrypt(kp.public_key, random_bytes(rng, 65480), kBuckets).blob.size() ==
          65536);
}

TEST_CASE("hybrid round trip over random lengths, padded and unpadded") {
    Rng rng(3);
    crypto::KeyPair kp = crypto::keygen(rng);
    for (int i = 0; i < 50; ++i) {
        std::size_t n = static_cast<std::size_t>(rng.uniform(0, 5000));
        Bytes m = random_bytes(rng, n);
        crypto::Ciphertext padded = crypto::hybrid_encrypt(kp.public_key, m, kBuckets);
        CHECK(crypto::hybrid_decrypt(kp, padded) == m);
        crypto::Ciphertext bare = crypto::hybrid_encrypt(kp.public_key, m, {});
        CHECK(bare.blob.size() == n + crypto::hybrid_overhead());
        CHECK(crypto::hybrid_decrypt(kp, bare) == m);
    }
}

TEST_CASE("empty message round trips") {
    Rng rng(4);
    crypto::KeyPair kp = crypto::keygen(rng);
    crypto::Ciphertext c = crypto::hybrid_encrypt(kp.public_key, Bytes{}, kBuckets);
    CHECK(c.blob.size() == 256);
    CHECK(crypto::hybrid_decrypt(kp, c).empty());
}

TEST_CASE("oversized message is rejected") {
    Rng rng(5);
    crypto::KeyPair kp = crypto::keygen(rng);
    Bytes m = random_bytes(rng, 65536 - crypto::hybrid_overhead() + 1);
    CHECK_THROWS_AS(crypto::hybrid_encrypt(kp.public_key, m, kBuckets), MarketError);
    try {
        crypto::hybrid_encrypt(kp.public_key, m, kBuckets);
    } catch (const MarketError& e) {
        CHECK(e.code() == Errc::MessageTooLarge);
    }
}

TEST_CASE("tampering or the wrong key fails authentication") {
    Rng rng(6);
    crypto::KeyPair kp = crypto::keygen(rng);
    crypto::KeyPair other = crypto::keygen(rng);
    Bytes m = random_bytes(rng, 300);
    crypto::Ciphertext c = crypto::hybrid_encrypt(kp.public_key, m, kBuckets);

    crypto::Ciphertext flipped = c;
    flipped.blob[10] ^= 0x01;
    CHECK_THROWS_AS(crypto::hybrid_decrypt(kp, flipped), MarketError);
    CHECK_THROWS_AS(crypto::hybrid_decrypt(other, c), MarketError);
    try {
        crypto::hybrid_decrypt(other, c);
    } catch (const MarketError& e) {
        CHECK(e.code() == Errc::DecryptFailure);
    }
}

TEST_CASE("symmetric encryption round trips a 1 MiB payload and authenticates") {
    Rng rng(7);
    crypto::SymmetricKey k = crypto::make_symmetric_key(rng);
    Bytes m = random_bytes(rng, 1 << 20);
    Bytes c = crypto::sym_encrypt(k, m);
    CHECK(c.size() > m.size());
    CHECK(crypto::sym_decrypt(k, c) == m);

    Bytes flipped = c;
    flipped[flipped.size() / 2] ^= 0x80;
    CHECK_THROWS_AS(crypto::sym_decrypt(k, flipped), MarketError);
    crypto::SymmetricKey wrong = crypto::make_symmetric_key(rng);
    CHECK_THROWS_AS(crypto::sym_decrypt(wrong, c), MarketError);
}

TEST_CASE("signatures verify and reject modification") {
    Rng rng(8);
    crypto::SignKeyPair sk = crypto::sign_keygen(rng);
    Bytes m = random_bytes(rng, 64);
    Bytes sig = crypto::sign(sk.secret_key, m);
    CHECK(crypto::verify(sk.public_key, m, sig));

    Bytes other = m;
    other[0] ^= 1;
    CHECK_FALSE(crypto::verify(sk.public_key, other, sig));
    crypto::SignKeyPair stranger = crypto::sign_keygen(rng);
    CHECK_FALSE(crypto::verify(stranger.public_key, m, sig));
}

TEST_CASE("nonces and symmetric keys survive the hex round trip") {
    Rng rng(9);
    crypto::Nonce n = crypto::make_nonce(rng);
    CHECK(crypto::Nonce::from_hex(n.hex()) == n);
    crypto::SymmetricKey k = crypto::make_symmetric_key(rng);
    CHECK(crypto::SymmetricKey::from_hex(k.hex()) == k);
}
