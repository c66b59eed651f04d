#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "market/scenario.hpp"

namespace market {

enum class ObserverRole { external, insider_seller, insider_buyer };

/// One L1 transaction as seen by an observer: timing, chain pair, and padded
/// payload size. Nothing else of the transaction is visible.
struct L1Timing {
    std::uint64_t seq = 0;
    std::uint64_t epoch = 0;
    std::string src_chain;
    std::string dst_chain;
    std::size_t payload_len = 0;
};

/// Everything the modeled adversary can see: public-chain blocks, anchors,
/// and L1 transaction timings. Never contains broker-chain mutations or any
/// key material. Insider roles additionally carry the insider's own
/// legitimately-learned per-trade values.
struct ObserverView {
    std::vector<ChainBlock> seller_chain_blocks;
    std::vector<ChainBlock> buyer_chain_blocks;
    std::vector<AnchorTx> anchor_txs;
    std::vector<L1Timing> l1_tx_timings;

    struct InsiderKnowledge {
        std::string agent_id;
        std::vector<std::string> own_trade_ids;
        Bytes own_counterparty_pubkey;  // KU_buyer learned by an insider seller
        std::string own_counterparty_nonce_hex;
    };
    std::optional<InsiderKnowledge> insider;
};

ObserverView build_observer_view(const SimulationResult& result, ObserverRole role,
                                 const std::string& insider_agent_id = "");

/// Guessed buyer-side event -> seller-side event links (by trace seq), a
/// partial injective map; absent buyer events are abstentions.
struct LinkageGuess {
    std::map<std::uint64_t, std::uint64_t> links;
};

/// Positional linking of seller->broker traffic against broker->buyer-chain
/// traffic one epoch later; defeated by batched (shuffled) broker output.
LinkageGuess timing_attack(const ObserverView& view);

/// Length matching of buyer-chain->broker requests against seller-chain->
/// broker requests in the same epoch; defeated by bucket padding.
LinkageGuess size_attack(const ObserverView& view);

/// Per-trade designated event pair used to score a guess: the buyer-side
/// trace seq mapped to the seller-side trace seq of the same trade.
using GroundTruth = std::map<std::uint64_t, std::uint64_t>;

/// Truth for the timing channel: each trade's broker->buyer relay paired
/// with its seller->broker delivery forward.
GroundTruth ground_truth_relay(const TradeTrace& trace);
/// Truth for the size channel: each trade's buy-request forward paired with
/// its sell-request forward.
GroundTruth ground_truth_requests(const TradeTrace& trace);

/// Correct designated links / total trades, in [0, 1].
double linkage_accuracy(const LinkageGuess& guess, const GroundTruth& truth);

struct AttackReport {
    std::string attack;
    std::size_t n_trades = 0;
    std::size_t n_runs = 0;
    double mean_accuracy = 0.0;
    double ci95_low = 0.0;
    double ci95_high = 0.0;
    bool padding = false;
    bool batching = false;
    bool degenerate_interval = false;  // set when n_runs == 1

    nlohmann::json to_json() const;
};

/// Monte Carlo over seeds base_config.seed + i. Throws UnknownAttack.
AttackReport run_attack_montecarlo(const ScenarioConfig& base_config, const std::string& attack,
                                   std::size_t n_runs);

/// Single-trace attack, e.g. on a trace loaded from disk.
AttackReport run_attack_on_result(const SimulationResult& result, const std::string& attack);

}  // namespace market
