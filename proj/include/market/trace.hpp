#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace market {

enum class EventType {
    OffLedger,  // wallet -> chain API call, no L1 transaction
    OnLedger,   // contract call wrapped into an L1 transaction
    Transfer,   // cross-chain asset transfer on L1
    Anchor,     // per-chain state commitment on L1
    Block,      // L2 block produced (bookkeeping, not an L1 transaction)
    Error,      // protocol-level rejection
    Alert,      // agent-side abort (e.g. nonce mismatch)
};

const char* event_type_name(EventType t);
EventType event_type_from_name(const std::string& s);

struct TraceEvent {
    std::uint64_t seq = 0;
    std::uint64_t epoch = 0;
    EventType type = EventType::OffLedger;
    std::string chain;         // source chain ("wallet" origin for off-ledger)
    std::string target_chain;  // destination chain, empty when not applicable
    bool l1_tx = false;
    std::uint64_t gas = 0;
    std::size_t payload_len = 0;
    std::string trade_id;  // resolved after the run; empty when unattributed
    std::string note;      // message kind or error code; not observer-visible

    nlohmann::json to_json() const;
    static TraceEvent from_json(const nlohmann::json& j);
};

struct TradeTrace {
    std::vector<TraceEvent> events;

    TraceEvent& append(TraceEvent ev) {
        ev.seq = events.size();
        events.push_back(std::move(ev));
        return events.back();
    }

    std::string to_jsonl() const;
    static TradeTrace from_jsonl(const std::string& text);
};

}  // namespace market
