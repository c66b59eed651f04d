#include "market/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace market {

namespace {

bool is_l1(const TraceEvent& ev) {
    return ev.l1_tx && (ev.type == EventType::OnLedger || ev.type == EventType::Transfer ||
                        ev.type == EventType::Anchor);
}

}  // namespace

ObserverView build_observer_view(const SimulationResult& result, ObserverRole role,
                                 const std::string& insider_agent_id) {
    ObserverView view;
    auto sellers = result.blocks.find(kSellersChain);
    if (sellers != result.blocks.end()) view.seller_chain_blocks = sellers->second;
    auto buyers = result.blocks.find(kBuyersChain);
    if (buyers != result.blocks.end()) view.buyer_chain_blocks = buyers->second;
    view.anchor_txs = result.anchors;

    // Only the public L1 envelope is copied: when, which chain pair, how big.
    // Kinds, trade ids, and broker-chain contents stay out of the view.
    for (const TraceEvent& ev : result.trace.events) {
        if (!is_l1(ev)) continue;
        view.l1_tx_timings.push_back({.seq = ev.seq,
                                      .epoch = ev.epoch,
                                      .src_chain = ev.chain,
                                      .dst_chain = ev.target_chain,
                                      .payload_len = ev.payload_len});
    }

    if (role != ObserverRole::external) {
        ObserverView::InsiderKnowledge insider;
        insider.agent_id = insider_agent_id;
        for (const TradeTruth& t : result.trades) {
            const std::string& own =
                role == ObserverRole::insider_seller ? t.seller_id : t.buyer_id;
            if (own == insider_agent_id) insider.own_trade_ids.push_back(t.trade_id);
        }
        view.insider = std::move(insider);
    }
    return view;
}

LinkageGuess timing_attack(const ObserverView& view) {
    // Bucket L1 traffic by epoch for the two directions of interest.
    std::map<std::uint64_t, std::vector<const L1Timing*>> inbound;   // sellers -> broker
    std::map<std::uint64_t, std::vector<const L1Timing*>> outbound;  // broker -> buyers
    for (const L1Timing& t : view.l1_tx_timings) {
        if (t.src_chain == kSellersChain && t.dst_chain == kBrokerChain)
            inbound[t.epoch].push_back(&t);
        else if (t.src_chain == kBrokerChain && t.dst_chain == kBuyersChain)
            outbound[t.epoch].push_back(&t);
    }

    // The broker forwards what it received one epoch earlier. If it does not
    // batch, submission order survives the hop, so position i in matches
    // position i out.
    LinkageGuess guess;
    for (auto& [epoch, outs] : outbound) {
        if (epoch == 0) continue;
        auto it = inbound.find(epoch - 1);
        if (it == inbound.end()) continue;
        std::size_t n = std::min(outs.size(), it->second.size());
        for (std::size_t i = 0; i < n; ++i) guess.links[outs[i]->seq] = it->second[i]->seq;
    }
    return guess;
}

LinkageGuess size_attack(const ObserverView& view) {
    std::map<std::uint64_t, std::vector<const L1Timing*>> seller_side;
    std::map<std::uint64_t, std::vector<const L1Timing*>> buyer_side;
    for (const L1Timing& t : view.l1_tx_timings) {
        if (t.src_chain == kSellersChain && t.dst_chain == kBrokerChain)
            seller_side[t.epoch].push_back(&t);
        else if (t.src_chain == kBuyersChain && t.dst_chain == kBrokerChain)
            buyer_side[t.epoch].push_back(&t);
    }

    // Requests about the same offer embed the same region name, so their
    // lengths co-vary: rank both sides by payload length and match ranks.
    auto by_len = [](const L1Timing* a, const L1Timing* b) {
        return a->payload_len != b->payload_len ? a->payload_len < b->payload_len
                                                : a->seq < b->seq;
    };
    LinkageGuess guess;
    for (auto& [epoch, buys] : buyer_side) {
        auto it = seller_side.find(epoch);
        if (it == seller_side.end()) continue;
        std::vector<const L1Timing*> sells = it->second;
        std::sort(buys.begin(), buys.end(), by_len);
        std::sort(sells.begin(), sells.end(), by_len);
        std::size_t n = std::min(buys.size(), sells.size());
        for (std::size_t i = 0; i < n; ++i) guess.links[buys[i]->seq] = sells[i]->seq;
    }
    return guess;
}

namespace {

GroundTruth pair_by_trade(const TradeTrace& trace, const std::string& buyer_note,
                          const std::string& seller_note) {
    std::map<std::string, std::uint64_t> buyer_seq, seller_seq;
    for (const TraceEvent& ev : trace.events) {
        if (ev.type != EventType::OnLedger || ev.trade_id.empty()) continue;
        if (ev.note == buyer_note) buyer_seq.emplace(ev.trade_id, ev.seq);
        else if (ev.note == seller_note) seller_seq.emplace(ev.trade_id, ev.seq);
    }
    GroundTruth truth;
    for (const auto& [trade, b] : buyer_seq) {
        auto it = seller_seq.find(trade);
        if (it != seller_seq.end()) truth[b] = it->second;
    }
    return truth;
}

}  // namespace

GroundTruth ground_truth_relay(const TradeTrace& trace) {
    return pair_by_trade(trace, "relay", "delivery");
}

GroundTruth ground_truth_requests(const TradeTrace& trace) {
    return pair_by_trade(trace, "buy_request", "sell_request");
}

double linkage_accuracy(const LinkageGuess& guess, const GroundTruth& truth) {
    if (truth.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& [b, s] : truth) {
        auto it = guess.links.find(b);
        if (it != guess.links.end() && it->second == s) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

nlohmann::json AttackReport::to_json() const {
    return {{"attack", attack},
            {"n_trades", n_trades},
            {"n_runs", n_runs},
            {"mean_accuracy", mean_accuracy},
            {"ci95_low", ci95_low},
            {"ci95_high", ci95_high},
            {"padding", padding},
            {"batching", batching},
            {"degenerate_interval", degenerate_interval}};
}

namespace {

double run_once(const SimulationResult& result, const std::string& attack,
                std::size_t* n_trades) {
    ObserverView view = build_observer_view(result, ObserverRole::external);
    LinkageGuess guess;
    GroundTruth truth;
    if (attack == "timing") {
        guess = timing_attack(view);
        truth = ground_truth_relay(result.trace);
    } else if (attack == "size") {
        guess = size_attack(view);
        truth = ground_truth_requests(result.trace);
    } else {
        throw MarketError(Errc::UnknownAttack, attack);
    }
    if (n_trades) *n_trades = truth.size();
    return linkage_accuracy(guess, truth);
}

AttackReport summarize(const std::string& attack, const std::vector<double>& accuracies,
                       std::size_t n_trades, bool padding, bool batching) {
    AttackReport report;
    report.attack = attack;
    report.n_trades = n_trades;
    report.n_runs = accuracies.size();
    double sum = 0.0;
    for (double a : accuracies) sum += a;
    report.mean_accuracy = sum / static_cast<double>(accuracies.size());
    if (accuracies.size() > 1) {
        double var = 0.0;
        for (double a : accuracies) var += (a - report.mean_accuracy) * (a - report.mean_accuracy);
        var /= static_cast<double>(accuracies.size() - 1);
        double half = 1.96 * std::sqrt(var / static_cast<double>(accuracies.size()));
        report.ci95_low = std::max(0.0, report.mean_accuracy - half);
        report.ci95_high = std::min(1.0, report.mean_accuracy + half);
    } else {
        report.ci95_low = report.ci95_high = report.mean_accuracy;
        report.degenerate_interval = true;
    }
    report.padding = padding;
    report.batching = batching;
    return report;
}

}  // namespace

AttackReport run_attack_montecarlo(const ScenarioConfig& base_config, const std::string& attack,
                                   std::size_t n_runs) {
    if (attack != "timing" && attack != "size")
        throw MarketError(Errc::UnknownAttack, attack);
    if (n_runs == 0) throw MarketError(Errc::InvalidInput, "n_runs must be positive");

    std::vector<double> accuracies;
    std::size_t n_trades = 0;
    for (std::size_t i = 0; i < n_runs; ++i) {
        ScenarioConfig config = base_config;
        config.seed = base_config.seed + i;
        SimulationResult result = run_simulation(config);
        std::size_t trades = 0;
        accuracies.push_back(run_once(result, attack, &trades));
        if (i == 0) n_trades = trades;
    }
    return summarize(attack, accuracies, n_trades, base_config.padding, base_config.batching);
}

AttackReport run_attack_on_result(const SimulationResult& result, const std::string& attack) {
    std::size_t n_trades = 0;
    double accuracy = run_once(result, attack, &n_trades);
    return summarize(attack, {accuracy}, n_trades, result.config.padding,
                     result.config.batching);
}

}  // namespace market
