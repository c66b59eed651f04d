#include "market/trace.hpp"

#include <sstream>

#include "market/errors.hpp"

namespace market {

const char* event_type_name(EventType t) {
    switch (t) {
        case EventType::OffLedger: return "off_ledger";
        case EventType::OnLedger: return "on_ledger";
        case EventType::Transfer: return "transfer";
        case EventType::Anchor: return "anchor";
        case EventType::Block: return "block";
        case EventType::Error: return "error";
        case EventType::Alert: return "alert";
    }
    return "off_ledger";
}

EventType event_type_from_name(const std::string& s) {
    for (EventType t : {EventType::OffLedger, EventType::OnLedger, EventType::Transfer,
                        EventType::Anchor, EventType::Block, EventType::Error, EventType::Alert})
        if (event_type_name(t) == s) return t;
    throw MarketError(Errc::ConfigParse, "unknown event type: " + s);
}

nlohmann::json TraceEvent::to_json() const {
    return nlohmann::json{
        {"seq", seq},
        {"epoch", epoch},
        {"event_type", event_type_name(type)},
        {"chain", chain},
        {"target_chain", target_chain},
        {"l1_tx", l1_tx},
        {"gas", gas},
        {"payload_len", payload_len},
        {"trade_id", trade_id},
        {"note", note},
    };
}

TraceEvent TraceEvent::from_json(const nlohmann::json& j) {
    TraceEvent ev;
    ev.seq = j.at("seq").get<std::uint64_t>();
    ev.epoch = j.at("epoch").get<std::uint64_t>();
    ev.type = event_type_from_name(j.at("event_type").get<std::string>());
    ev.chain = j.at("chain").get<std::string>();
    ev.target_chain = j.at("target_chain").get<std::string>();
    ev.l1_tx = j.at("l1_tx").get<bool>();
    ev.gas = j.at("gas").get<std::uint64_t>();
    ev.payload_len = j.at("payload_len").get<std::size_t>();
    ev.trade_id = j.at("trade_id").get<std::string>();
    ev.note = j.at("note").get<std::string>();
    return ev;
}

std::string TradeTrace::to_jsonl() const {
    std::string out;
    for (const TraceEvent& ev : events) {
        out += ev.to_json().dump();
        out += '\n';
    }
    return out;
}

TradeTrace TradeTrace::from_jsonl(const std::string& text) {
    TradeTrace trace;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        trace.events.push_back(TraceEvent::from_json(nlohmann::json::parse(line)));
    }
    return trace;
}

}  // namespace market
