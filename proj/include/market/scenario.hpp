#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "market/agents.hpp"
#include "market/broker.hpp"

namespace market {

struct FaultSpec {
    std::string agent;  // "seller-3" / "buyer-0"
    std::string fault;  // silent_buyer, wrong_sym_key, replay_sell_request,
                        // inflated_invoice, stale_notice, underpay
};

inline PriceTable default_price_table() {
    return PriceTable{{{SensorType::temperature, 2},
                       {SensorType::humidity, 2},
                       {SensorType::air_quality, 3},
                       {SensorType::traffic, 4},
                       {SensorType::energy, 5},
                       {SensorType::generic, 1}}};
}

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::uint64_t n_sellers = 2;
    std::uint64_t n_buyers = 2;
    PriceTable prices = default_price_table();
    bool padding = true;
    std::vector<std::size_t> padding_buckets = {256, 1024, 4096, 65536};
    bool batching = true;
    GasTariff gas;
    std::uint64_t score_timeout = 5;
    std::uint64_t abandon_timeout = 10;
    bool seller_choice = false;
    std::uint64_t cert_validity = 200;
    std::uint64_t volume = 50;
    std::vector<SensorType> sensor_types = {SensorType::temperature};
    std::vector<std::string> regions;  // defaults to cell-<i> per pair
    std::vector<FaultSpec> faults;
    std::uint64_t max_epochs = 60;
    std::uint64_t trades_per_pair = 1;
    std::uint64_t initial_buyer_funds = 1000;
    std::uint64_t contract_gas_float = 50;
    std::uint64_t broker_float = 1000;
    std::uint64_t blob_latency = 0;

    /// Bucket list actually applied to messages (empty when padding is off).
    std::vector<std::size_t> effective_buckets() const {
        return padding ? padding_buckets : std::vector<std::size_t>{};
    }

    std::string region_for(std::uint64_t pair) const;
    SensorType type_for(std::uint64_t pair) const;

    nlohmann::json to_json() const;
    /// Throws ConfigParse on any malformed or inconsistent field.
    static ScenarioConfig from_json(const nlohmann::json& j);
    static ScenarioConfig load_file(const std::string& path);
    void validate() const;
};

struct TradeTruth {
    std::string trade_id;
    std::string seller_id, buyer_id;
    std::string seller_contract, buyer_contract;
    std::uint64_t price = 0;
    TradeState final_state = TradeState::Matched;
    Bytes raw_data;
    Bytes recovered;
    crypto::SymmetricKey sym_key;
    std::string dd_json;
    bool buyer_received = false;
    std::optional<std::uint64_t> score_given;
};

struct SimulationResult {
    ScenarioConfig config;
    TradeTrace trace;  // trade ids resolved
    std::map<std::string, std::vector<ChainBlock>> blocks;
    std::vector<AnchorTx> anchors;
    std::map<ContentAddress, Bytes> blobs;
    std::vector<TradeTruth> trades;
    nlohmann::json reputation;
    std::uint64_t epochs_run = 0;
    std::uint64_t l1_tx_count = 0;
    std::uint64_t gas_sink = 0;
    std::uint64_t initial_supply = 0;
    std::uint64_t final_balances = 0;
    std::map<std::string, std::uint64_t> account_balances;
    std::uint64_t settled_trades = 0;
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

extern const std::string kBrokerChain;
extern const std::string kSellersChain;
extern const std::string kBuyersChain;
extern const std::string kBrokerAddress;

/// Deterministic end-to-end run: same config and seed, same trace bytes.
SimulationResult run_simulation(const ScenarioConfig& config);

}  // namespace market
