#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "market/ca.hpp"
#include "market/crypto.hpp"
#include "market/ledger.hpp"
#include "market/rng.hpp"

namespace market {

struct DataDescription {
    SensorType sensor_type = SensorType::generic;
    std::string region;  // coarse location cell; "*" on the buy side is a wildcard
    std::uint64_t volume = 0;
    std::uint64_t window_start = 0;
    std::uint64_t window_end = 0;

    nlohmann::json to_json() const;
    static DataDescription from_json(const nlohmann::json& j);
};

struct PriceTable {
    std::map<SensorType, std::uint64_t> basic_price;

    std::uint64_t at(SensorType t) const;
    nlohmann::json to_json() const;
    static PriceTable from_json(const nlohmann::json& j);
};

/// Price = basic price of sensor * volume of data. Throws InvalidInput on
/// non-positive arguments or overflow.
std::uint64_t compute_price(std::uint64_t basic_price, std::uint64_t volume);

struct SellOrder {
    DataDescription dd;
    Certificate cert;
    crypto::Nonce seller_nonce;  // ID_s
    Bytes seller_pubkey;         // KU_seller, fresh per trade
    std::string origin_contract;
    std::uint64_t admission_epoch = 0;
    std::uint64_t order_seq = 0;
    std::string corr;  // request correlation tag for trace attribution
};

struct BuyOrder {
    DataDescription dd;
    crypto::Nonce buyer_nonce;  // ID_b
    Bytes buyer_pubkey;         // KU_buyer, fresh per trade
    std::string origin_contract;
    std::uint64_t admission_epoch = 0;
    std::uint64_t order_seq = 0;
    std::string corr;
};

struct Invoice {
    std::string trade_id;
    std::uint64_t price = 0;
    std::string pay_to;

    nlohmann::json to_json() const;
    static Invoice from_json(const nlohmann::json& j);
};

enum class TradeState {
    Matched,
    Invoiced,
    Paid,
    SellerNotified,
    Delivered,
    Scored,
    Settled,
    Expired,
};

const char* trade_state_name(TradeState s);

struct Trade {
    std::string id;
    SellOrder sell;
    BuyOrder buy;
    std::uint64_t price = 0;
    TradeState state = TradeState::Matched;
    std::uint64_t last_transition_epoch = 0;
    std::uint64_t delivery_epoch = 0;
    std::uint64_t escrow = 0;
    bool awaiting_seller_confirm = false;
};

struct ReputationEntry {
    std::uint64_t score_sum = 0;
    std::uint64_t score_count = 0;

    double mean() const { return score_count == 0 ? 0.0 : double(score_sum) / double(score_count); }
};

using ReputationTable = std::map<std::string, ReputationEntry>;  // seller contract -> entry

/// Deterministic greedy matching: buys in admission order; for each buy, the
/// compatible sell with the best (reputation mean desc, admission asc,
/// sequence asc). Compatibility: equal sensor type, seller region equals
/// buyer region (or buyer wildcard), seller volume covers buyer volume, and
/// overlapping time windows. Returns matched (sell index, buy index) pairs.
std::vector<std::pair<std::size_t, std::size_t>> match_orders(
    const std::vector<SellOrder>& sells, const std::vector<BuyOrder>& buys,
    const ReputationTable& reputation);

/// The broker smart contract on the consortium chain. Entry points arrive as
/// messages linearized by the epoch scheduler; end_epoch() runs matching,
/// timeout sweeps, and flushes the outbound batch (shuffled when batching is
/// enabled).
class BrokerContract : public Contract {
public:
    struct Config {
        PriceTable prices;
        std::vector<Bytes> trusted_issuers;
        std::vector<std::size_t> padding_buckets;
        bool batching = true;
        std::uint64_t score_timeout = 5;
        std::uint64_t abandon_timeout = 10;
        bool seller_choice = false;
        /// Fault injection: origin contracts whose trades get a +1 invoice.
        std::set<std::string> inflate_invoice_for;
        /// Fault injection: sellers who receive a notice with a stale ID_s.
        std::set<std::string> stale_notice_for;
    };

    BrokerContract(Ledger& ledger, std::string chain_id, std::string address,
                   crypto::KeyPair keys, Config config, Rng rng);

    void on_message(const Message& msg, std::uint64_t epoch) override;

    /// Matching, settlement/expiry sweep, outbound flush. Call once per epoch
    /// after delivery.
    void end_epoch(std::uint64_t epoch);

    bool idle() const;  // no open orders, no live trades, nothing outbound

    const std::map<std::string, Trade>& trades() const { return trades_; }
    const Trade* find_trade(const std::string& id) const;
    const ReputationTable& reputation() const { return reputation_; }
    nlohmann::json reputation_json() const;
    const std::vector<SellOrder>& open_sells() const { return sells_; }
    const std::vector<BuyOrder>& open_buys() const { return buys_; }
    /// trade id -> (sell corr, buy corr), for post-run trace attribution.
    std::map<std::string, std::pair<std::string, std::string>> correlation_map() const;

    const Bytes& public_key() const { return keys_.public_key; }

private:
    void handle_sell_request(const Message& msg, std::uint64_t epoch);
    void handle_buy_request(const Message& msg, std::uint64_t epoch);
    void handle_seller_confirm(const Message& msg, std::uint64_t epoch);
    void handle_payment(const Message& msg, std::uint64_t epoch);
    void handle_delivery(const Message& msg, std::uint64_t epoch);
    void handle_score(const Message& msg, std::uint64_t epoch);

    void issue_invoice(Trade& trade, std::uint64_t epoch);
    void refund(const std::string& to_contract, std::uint64_t amount, const std::string& corr);
    void notify_seller(Trade& trade, std::uint64_t epoch);
    void settle(Trade& trade, std::uint64_t epoch);
    void expire(Trade& trade, std::uint64_t epoch);

    void transition(Trade& trade, TradeState next, std::uint64_t epoch);
    void queue_out(Message msg, const std::string& target_chain, bool transfer = false);
    void record_error(Errc code, std::uint64_t epoch, const std::string& corr,
                      const std::string& detail);
    crypto::Ciphertext encrypt_to(const Bytes& pk, const nlohmann::json& body) const;
    nlohmann::json decrypt_json(const Bytes& blob) const;

    Ledger& ledger_;
    std::string chain_id_;
    std::string address_;
    crypto::KeyPair keys_;
    Config config_;
    Rng rng_;

    std::vector<SellOrder> sells_;
    std::vector<BuyOrder> buys_;
    std::set<std::pair<std::string, crypto::Nonce>> seen_sell_keys_;
    std::set<std::pair<std::string, crypto::Nonce>> seen_buy_keys_;
    std::map<std::string, Trade> trades_;
    ReputationTable reputation_;
    std::uint64_t next_order_seq_ = 0;
    std::uint64_t next_trade_ = 0;

    struct Outbound {
        Message msg;
        std::string target_chain;
        bool transfer;
    };
    std::vector<Outbound> outbound_;
};

}  // namespace market
