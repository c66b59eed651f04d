#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "market/scenario.hpp"

namespace market {

/// L1 transaction count of one fully completed trade on the happy path:
/// two request forwards, invoice, payment transfer, notice, delivery
/// forward, relay, score forward, settlement transfer.
inline constexpr std::uint64_t kHappyPathL1TxPerTrade = 9;
/// Off-ledger wallet calls on the same path: sell request, buy request,
/// payment instruction, delivery, score.
inline constexpr std::uint64_t kHappyPathOffLedgerPerTrade = 5;

struct TradeCost {
    std::string trade_id;
    std::uint64_t l1_txs = 0;
    std::uint64_t off_ledger = 0;
    std::uint64_t gas = 0;
    std::uint64_t price = 0;
    TradeState final_state = TradeState::Matched;

    nlohmann::json to_json() const;
};

/// Gas spent relative to the traded price. Throws ZeroPrice.
double gas_to_price_ratio(std::uint64_t gas, std::uint64_t price);

/// Completed trades per epoch over the whole run.
double throughput(const SimulationResult& result);

/// Per-trade event and gas totals from the resolved trace. Throws NotFound
/// for an unknown trade id and TradeIncomplete for a trade the run left
/// mid-flight (neither settled, scored, nor expired).
TradeCost account_trade(const SimulationResult& result, const std::string& trade_id);

struct CostReport {
    std::vector<TradeCost> trades;
    std::uint64_t total_l1_txs = 0;      // whole run, anchors included
    std::uint64_t total_gas_sink = 0;
    std::uint64_t settled_trades = 0;
    std::uint64_t epochs_run = 0;
    double trades_per_epoch = 0.0;
    double mean_gas_to_price = 0.0;  // over trades with a nonzero price

    nlohmann::json to_json() const;
};

CostReport build_cost_report(const SimulationResult& result);

}  // namespace market
