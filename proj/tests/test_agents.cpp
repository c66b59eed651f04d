#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "market/scenario.hpp"

using namespace market;

namespace {

ScenarioConfig base_config() {
    ScenarioConfig config;
    config.seed = 71;
    config.n_sellers = 2;
    config.n_buyers = 2;
    return config;
}

std::size_t count_notes(const SimulationResult& r, EventType type, const std::string& prefix) {
    std::size_t n = 0;
    for (const TraceEvent& ev : r.trace.events)
        if (ev.type == type && ev.note.rfind(prefix, 0) == 0) ++n;
    return n;
}

const TradeTruth& trade_of_buyer(const SimulationResult& r, const std::string& buyer_id) {
    for (const TradeTruth& t : r.trades)
        if (t.buyer_id == buyer_id) return t;
    REQUIRE(false);
    return r.trades.front();
}

}  // namespace

TEST_CASE("settled trades hand the buyer the exact bytes the seller produced") {
    SimulationResult r = run_simulation(base_config());
    REQUIRE(r.ok());
    REQUIRE(r.trades.size() == 2);
    for (const TradeTruth& t : r.trades) {
        CHECK(t.final_state == TradeState::Settled);
        CHECK(t.buyer_received);
        REQUIRE_FALSE(t.raw_data.empty());
        CHECK(t.recovered == t.raw_data);
        CHECK(t.score_given == 100);
    }
}

TEST_CASE("per-trade keys and nonces are fresh across consecutive trades") {
    ScenarioConfig config = base_config();
    config.trades_per_pair = 2;
    config.max_epochs = 80;
    SimulationResult r = run_simulation(config);
    REQUIRE(r.ok());  // the freshness registry found no reuse
    REQUIRE(r.trades.size() == 4);
    std::set<crypto::SymmetricKey> keys;
    for (const TradeTruth& t : r.trades) {
        CHECK(t.final_state == TradeState::Settled);
        CHECK(t.recovered == t.raw_data);
        keys.insert(t.sym_key);
    }
    CHECK(keys.size() == 4);  // a new data key per trade
}

TEST_CASE("every padded protocol message lands exactly on a bucket size") {
    ScenarioConfig config = base_config();
    SimulationResult r = run_simulation(config);
    std::set<std::size_t> buckets(config.padding_buckets.begin(), config.padding_buckets.end());
    for (const TraceEvent& ev : r.trace.events) {
        if (ev.type != EventType::OnLedger && ev.type != EventType::Transfer) continue;
        if (ev.payload_len == 0) continue;  // refunds carry assets, not payloads
        CHECK(buckets.count(ev.payload_len) == 1);
    }
}

TEST_CASE("without padding message sizes are no longer bucket-aligned") {
    ScenarioConfig config = base_config();
    config.padding = false;
    SimulationResult r = run_simulation(config);
    std::set<std::size_t> buckets(config.padding_buckets.begin(), config.padding_buckets.end());
    bool any_off_bucket = false;
    for (const TraceEvent& ev : r.trace.events)
        if (ev.type == EventType::OnLedger && ev.payload_len > 0 && !buckets.count(ev.payload_len))
            any_off_bucket = true;
    CHECK(any_off_bucket);
    for (const TradeTruth& t : r.trades) CHECK(t.recovered == t.raw_data);
}

TEST_CASE("a stale notice nonce makes the seller abort and the trade expire") {
    ScenarioConfig config = base_config();
    config.faults = {{"seller-0", "stale_notice"}};
    SimulationResult r = run_simulation(config);
    REQUIRE(r.ok());
    CHECK(count_notes(r, EventType::Alert, "NonceMismatch") == 1);
    std::size_t settled = 0, expired = 0;
    for (const TradeTruth& t : r.trades) {
        if (t.final_state == TradeState::Settled) ++settled;
        if (t.final_state == TradeState::Expired) ++expired;
    }
    CHECK(settled == 1);
    CHECK(expired == 1);
}

TEST_CASE("a replayed sell request is rejected while the original settles") {
    ScenarioConfig config = base_config();
    config.faults = {{"seller-0", "replay_sell_request"}};
    SimulationResult r = run_simulation(config);
    REQUIRE(r.ok());
    CHECK(count_notes(r, EventType::Error, "DuplicateOrder") == 1);
    for (const TradeTruth& t : r.trades) CHECK(t.final_state == TradeState::Settled);
}

TEST_CASE("advertising the wrong data key earns a zero score") {
    ScenarioConfig config = base_config();
    config.faults = {{"seller-0", "wrong_sym_key"}};
    SimulationResult r = run_simulation(config);
    REQUIRE(r.ok());
    bool saw_zero = false, saw_hundred = false;
    for (const TradeTruth& t : r.trades) {
        CHECK(t.final_state == TradeState::Settled);
        if (t.score_given == 0) {
            saw_zero = true;
            CHECK(t.recovered.empty());  // decryption failed, nothing recovered
        }
        if (t.score_given == 100) saw_hundred = true;
    }
    CHECK(saw_zero);
    CHECK(saw_hundred);
}

TEST_CASE("an inflated invoice is refused before any payment leaves the buyer") {
    ScenarioConfig config = base_config();
    config.faults = {{"buyer-0", "inflated_invoice"}};
    SimulationResult r = run_simulation(config);
    REQUIRE(r.ok());
    CHECK(count_notes(r, EventType::Alert, "PriceMismatch") == 1);
    const TradeTruth& victim = trade_of_buyer(r, "buyer-0");
    CHECK(victim.final_state == TradeState::Expired);
    CHECK_FALSE(victim.buyer_received);
    // No payment transfer was ever attributed to the poisoned trade.
    for (const TraceEvent& ev : r.trace.events)
        if (ev.type == EventType::Transfer && ev.trade_id == victim.trade_id)
            CHECK(ev.note != "payment");
}

TEST_CASE("an underpaying buyer is refunded and the trade expires") {
    ScenarioConfig config = base_config();
    config.faults = {{"buyer-0", "underpay"}};
    SimulationResult r = run_simulation(config);
    REQUIRE(r.ok());
    CHECK(count_notes(r, EventType::Error, "WrongAmount") == 1);
    const TradeTruth& victim = trade_of_buyer(r, "buyer-0");
    CHECK(victim.final_state == TradeState::Expired);
    bool refunded = false;
    for (const TraceEvent& ev : r.trace.events)
        if (ev.type == EventType::Transfer && ev.note == "refund") refunded = true;
    CHECK(refunded);
}

TEST_CASE("a silent buyer cannot stall settlement past the score window") {
    ScenarioConfig config = base_config();
    config.faults = {{"buyer-0", "silent_buyer"}};
    SimulationResult r = run_simulation(config);
    REQUIRE(r.ok());
    const TradeTruth& silent = trade_of_buyer(r, "buyer-0");
    CHECK(silent.final_state == TradeState::Settled);
    CHECK(silent.buyer_received);
    CHECK_FALSE(silent.score_given.has_value());
    const TradeTruth& honest = trade_of_buyer(r, "buyer-1");
    CHECK(honest.score_given == 100);
}

TEST_CASE("an expired certificate stops the seller before any traffic") {
    ScenarioConfig config = base_config();
    config.trades_per_pair = 2;
    config.cert_validity = 10;  // valid for the first trade only
    config.max_epochs = 80;
    SimulationResult r = run_simulation(config);
    CHECK(count_notes(r, EventType::Alert, "CertExpiredLocally") == 2);
    std::size_t settled = 0;
    for (const TradeTruth& t : r.trades)
        if (t.final_state == TradeState::Settled) ++settled;
    CHECK(settled == 2);  // the first round completed normally
    CHECK(r.trades.size() == 2);  // no second-round trades ever formed
}

TEST_CASE("seller choice mode still reaches settlement end to end") {
    ScenarioConfig config = base_config();
    config.seller_choice = true;
    SimulationResult r = run_simulation(config);
    REQUIRE(r.ok());
    for (const TradeTruth& t : r.trades) {
        CHECK(t.final_state == TradeState::Settled);
        CHECK(t.recovered == t.raw_data);
    }
    std::size_t confirms = 0;
    for (const TraceEvent& ev : r.trace.events)
        if (ev.type == EventType::OnLedger && ev.note == "seller_confirm") ++confirms;
    CHECK(confirms == 2);
}

TEST_CASE("blob retrieval latency delays but does not break delivery") {
    ScenarioConfig config = base_config();
    config.blob_latency = 3;
    SimulationResult slow = run_simulation(config);
    REQUIRE(slow.ok());
    for (const TradeTruth& t : slow.trades) {
        CHECK(t.final_state == TradeState::Settled);
        CHECK(t.recovered == t.raw_data);
    }
    config.blob_latency = 0;
    SimulationResult fast = run_simulation(config);
    CHECK(slow.epochs_run > fast.epochs_run);
}

TEST_CASE("buyer funds end where the protocol says they should") {
    ScenarioConfig config = base_config();
    SimulationResult r = run_simulation(config);
    REQUIRE(r.ok());
    // Conservation held every epoch, so the books balance at the end too.
    CHECK(r.final_balances + r.gas_sink == r.initial_supply);
}
