#include "market/metrics.hpp"

#include <algorithm>

namespace market {

nlohmann::json TradeCost::to_json() const {
    nlohmann::json j{{"trade_id", trade_id},
                     {"l1_txs", l1_txs},
                     {"off_ledger", off_ledger},
                     {"gas", gas},
                     {"price", price},
                     {"final_state", trade_state_name(final_state)}};
    if (price > 0) j["gas_to_price"] = gas_to_price_ratio(gas, price);
    return j;
}

double gas_to_price_ratio(std::uint64_t gas, std::uint64_t price) {
    if (price == 0) throw MarketError(Errc::ZeroPrice, "price is zero");
    return static_cast<double>(gas) / static_cast<double>(price);
}

double throughput(const SimulationResult& result) {
    if (result.epochs_run == 0) return 0.0;
    return static_cast<double>(result.settled_trades) / static_cast<double>(result.epochs_run);
}

TradeCost account_trade(const SimulationResult& result, const std::string& trade_id) {
    auto it = std::find_if(result.trades.begin(), result.trades.end(),
                           [&](const TradeTruth& t) { return t.trade_id == trade_id; });
    if (it == result.trades.end()) throw MarketError(Errc::NotFound, trade_id);
    if (it->final_state != TradeState::Settled && it->final_state != TradeState::Expired)
        throw MarketError(Errc::TradeIncomplete,
                          trade_id + " ended " + trade_state_name(it->final_state));

    TradeCost cost;
    cost.trade_id = trade_id;
    cost.price = it->price;
    cost.final_state = it->final_state;
    for (const TraceEvent& ev : result.trace.events) {
        if (ev.trade_id != trade_id) continue;
        if (ev.l1_tx) ++cost.l1_txs;
        if (ev.type == EventType::OffLedger) ++cost.off_ledger;
        cost.gas += ev.gas;
    }
    return cost;
}

CostReport build_cost_report(const SimulationResult& result) {
    CostReport report;
    double ratio_sum = 0.0;
    std::uint64_t ratio_count = 0;
    for (const TradeTruth& t : result.trades) {
        TradeCost cost = account_trade(result, t.trade_id);
        if (cost.price > 0) {
            ratio_sum += gas_to_price_ratio(cost.gas, cost.price);
            ++ratio_count;
        }
        report.trades.push_back(std::move(cost));
    }
    report.total_l1_txs = result.l1_tx_count;
    report.total_gas_sink = result.gas_sink;
    report.settled_trades = result.settled_trades;
    report.epochs_run = result.epochs_run;
    report.trades_per_epoch = throughput(result);
    if (ratio_count > 0) report.mean_gas_to_price = ratio_sum / static_cast<double>(ratio_count);
    return report;
}

nlohmann::json CostReport::to_json() const {
    nlohmann::json per_trade = nlohmann::json::array();
    for (const TradeCost& t : trades) per_trade.push_back(t.to_json());
    return {{"trades", per_trade},
            {"total_l1_txs", total_l1_txs},
            {"total_gas_sink", total_gas_sink},
            {"settled_trades", settled_trades},
            {"epochs_run", epochs_run},
            {"trades_per_epoch", trades_per_epoch},
            {"mean_gas_to_price", mean_gas_to_price}};
}

}  // namespace market
