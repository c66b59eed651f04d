#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "market/blobstore.hpp"
#include "market/broker.hpp"
#include "market/ca.hpp"
#include "market/crypto.hpp"
#include "market/ledger.hpp"
#include "market/rng.hpp"

namespace market {

/// Run-wide registry of per-trade key and nonce material; flags any repeat.
struct FreshnessRegistry {
    std::set<crypto::Nonce> nonces;
    std::set<Bytes> pubkeys;
    std::vector<std::string> violations;

    void add_nonce(const crypto::Nonce& n, const std::string& who) {
        if (!nonces.insert(n).second) violations.push_back("nonce reuse by " + who);
    }
    void add_pubkey(const Bytes& pk, const std::string& who) {
        if (!pubkeys.insert(pk).second) violations.push_back("public key reuse by " + who);
    }
};

/// The per-user smart contract on a public chain. Forwards wallet requests to
/// the broker on-ledger, executes payment instructions as cross-chain
/// transfers, and hands inbound broker messages to the owner. Every payload
/// it touches is written into chain state as an opaque ciphertext mutation.
class UserContract : public Contract {
public:
    UserContract(Ledger& ledger, std::string chain_id, std::string address,
                 std::string broker_chain, std::string broker_address)
        : ledger_(ledger),
          chain_id_(std::move(chain_id)),
          address_(std::move(address)),
          broker_chain_(std::move(broker_chain)),
          broker_address_(std::move(broker_address)) {}

    void set_owner(std::function<void(const Message&)> deliver) {
        deliver_to_owner_ = std::move(deliver);
    }
    void on_message(const Message& msg, std::uint64_t epoch) override;

    const std::string& address() const { return address_; }

private:
    Ledger& ledger_;
    std::string chain_id_;
    std::string address_;
    std::string broker_chain_;
    std::string broker_address_;
    std::function<void(const Message&)> deliver_to_owner_;
    std::uint64_t write_seq_ = 0;
};

struct SellerTradeRecord {
    crypto::Nonce id_s;
    Bytes raw_data;
    crypto::SymmetricKey sym_key;
    bool delivered = false;
    bool settled = false;
};

class SellerAgent {
public:
    enum class State { Idle, Requested, Notified, DeliverySent, Settled, Aborted };

    struct Init {
        std::string id;
        std::string contract_address;
        std::string wallet;
        Certificate cert;
        DataDescription dd;
        Bytes broker_pubkey;
        std::vector<std::size_t> padding_buckets;
        std::uint64_t start_epoch = 0;
        std::uint64_t n_trades = 1;
        bool fault_wrong_sym_key = false;
        bool fault_replay_request = false;
    };

    SellerAgent(Init init, Rng rng, Ledger& ledger, BlobStore& store,
                FreshnessRegistry* registry);

    void deliver_from_contract(const Message& msg) { mailbox_.push_back(msg); }
    void step(std::uint64_t epoch);
    bool quiescent() const;

    State state() const { return state_; }
    const std::string& id() const { return init_.id; }
    const std::string& contract_address() const { return init_.contract_address; }
    const DataDescription& dd() const { return init_.dd; }
    const std::vector<SellerTradeRecord>& records() const { return records_; }
    const Bytes& current_pubkey() const { return trade_keys_.public_key; }

private:
    void start_trade(std::uint64_t epoch);
    void handle_notice(const Message& msg, std::uint64_t epoch);
    void handle_offer(const Message& msg, std::uint64_t epoch);
    void handle_settlement(const Message& msg, std::uint64_t epoch);
    void handle_expired(const Message& msg, std::uint64_t epoch);
    void alert(Errc code, std::uint64_t epoch, const std::string& detail);
    Bytes generate_sensor_data();

    Init init_;
    Rng rng_;
    Ledger& ledger_;
    BlobStore& store_;
    FreshnessRegistry* registry_;

    State state_ = State::Idle;
    crypto::KeyPair trade_keys_;
    crypto::Nonce id_s_;
    Bytes ku_buyer_;
    crypto::Nonce id_b_;
    std::string corr_;
    std::vector<SellerTradeRecord> records_;
    std::uint64_t trades_done_ = 0;
    std::vector<Message> mailbox_;
    std::optional<Message> pending_replay_;
};

struct BuyerTradeRecord {
    crypto::Nonce id_b;
    std::string trade_id;
    Bytes recovered;
    bool received = false;
    std::optional<std::uint64_t> score_given;
};

class BuyerAgent {
public:
    enum class State { Idle, Requested, Invoiced, Paid, Received, Scored, Aborted };

    struct Init {
        std::string id;
        std::string contract_address;
        std::string wallet;
        DataDescription dd;
        Bytes broker_pubkey;
        std::vector<std::size_t> padding_buckets;
        PriceTable prices;
        std::uint64_t start_epoch = 0;
        std::uint64_t n_trades = 1;
        bool fault_silent = false;     // never sends the score
        bool fault_underpay = false;   // pays price - 1
    };

    BuyerAgent(Init init, Rng rng, Ledger& ledger, BlobStore& store,
               FreshnessRegistry* registry);

    void deliver_from_contract(const Message& msg) { mailbox_.push_back(msg); }
    void step(std::uint64_t epoch);
    bool quiescent() const;

    State state() const { return state_; }
    const std::string& id() const { return init_.id; }
    const std::string& contract_address() const { return init_.contract_address; }
    const DataDescription& dd() const { return init_.dd; }
    const std::vector<BuyerTradeRecord>& records() const { return records_; }

private:
    void start_trade(std::uint64_t epoch);
    void handle_invoice(const Message& msg, std::uint64_t epoch);
    void handle_relay(const Message& msg, std::uint64_t epoch);
    void handle_refund(const Message& msg, std::uint64_t epoch);
    void finish_delivery(std::uint64_t epoch);
    void send_score(std::uint64_t score, std::uint64_t epoch);
    void alert(Errc code, std::uint64_t epoch, const std::string& detail);

    Init init_;
    Rng rng_;
    Ledger& ledger_;
    BlobStore& store_;
    FreshnessRegistry* registry_;

    State state_ = State::Idle;
    crypto::KeyPair trade_keys_;
    crypto::Nonce id_b_;
    std::string trade_id_;
    std::string corr_;
    std::vector<BuyerTradeRecord> records_;
    std::uint64_t trades_done_ = 0;
    std::vector<Message> mailbox_;

    struct PendingFetch {
        ContentAddress address;
        crypto::SymmetricKey key;
        std::uint64_t ready_epoch;
    };
    std::optional<PendingFetch> pending_fetch_;
};

}  // namespace market
