#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "market/ledger.hpp"
#include "market/rng.hpp"

using namespace market;

namespace {

struct RecordingContract : Contract {
    std::vector<std::pair<Message, std::uint64_t>> received;
    void on_message(const Message& msg, std::uint64_t epoch) override {
        received.emplace_back(msg, epoch);
    }
};

struct Fixture {
    TradeTrace trace;
    Ledger ledger{trace};
    RecordingContract a, b;

    Fixture() {
        ledger.add_chain("alpha", false);
        ledger.add_chain("beta", true);
        ledger.register_contract("alpha", "alpha/a", &a);
        ledger.register_contract("beta", "beta/b", &b);
        ledger.mint("alpha/a", 100);
        ledger.mint("beta/b", 100);
        ledger.mint("wallet:w", 100);
    }
};

}  // namespace

TEST_CASE("off-ledger submissions never create L1 transactions") {
    Fixture f;
    for (int i = 0; i < 1000; ++i)
        f.ledger.submit_off_ledger("alpha", {.from = "wallet:w",
                                             .to_contract = "alpha/a",
                                             .kind = "ping",
                                             .payload = to_bytes("x")});
    CHECK(f.ledger.l1_tx_count() == 0);
    f.ledger.deliver(1);
    CHECK(f.a.received.size() == 1000);
    CHECK(f.ledger.l1_tx_count() == 0);
    for (const TraceEvent& ev : f.trace.events) CHECK_FALSE(ev.l1_tx);
}

TEST_CASE("off-ledger submissions cannot carry assets") {
    Fixture f;
    try {
        f.ledger.submit_off_ledger(
            "alpha",
            {.from = "wallet:w", .to_contract = "alpha/a", .kind = "pay", .carried_assets = 5});
        CHECK(false);
    } catch (const MarketError& e) {
        CHECK(e.code() == Errc::InvalidInput);
    }
}

TEST_CASE("unknown chains and contracts are rejected at submission") {
    Fixture f;
    try {
        f.ledger.submit_off_ledger("gamma", {.from = "wallet:w", .to_contract = "gamma/x"});
        CHECK(false);
    } catch (const MarketError& e) {
        CHECK(e.code() == Errc::UnknownChain);
    }
    try {
        f.ledger.submit_on_ledger("alpha", "beta", {.from = "alpha/a", .to_contract = "beta/zzz"});
        CHECK(false);
    } catch (const MarketError& e) {
        CHECK(e.code() == Errc::UnknownContract);
    }
}

TEST_CASE("insufficient balance blocks on-ledger submission") {
    Fixture f;
    try {
        f.ledger.submit_on_ledger(
            "alpha", "beta",
            {.from = "alpha/a", .to_contract = "beta/b", .carried_assets = 1000});
        CHECK(false);
    } catch (const MarketError& e) {
        CHECK(e.code() == Errc::InsufficientBalance);
    }
    CHECK(f.ledger.balance("alpha/a") == 100);  // nothing was debited
}

TEST_CASE("messages submitted at epoch e are delivered at e+1") {
    Fixture f;
    f.ledger.deliver(0);
    f.ledger.submit_on_ledger("alpha", "beta",
                              {.from = "alpha/a", .to_contract = "beta/b", .kind = "m"});
    f.ledger.deliver(0);
    CHECK(f.b.received.empty());
    f.ledger.deliver(1);
    REQUIRE(f.b.received.size() == 1);
    CHECK(f.b.received[0].second == 1);
}

TEST_CASE("carried assets move exactly once and conservation holds mid-flight") {
    Fixture f;
    std::uint64_t minted = f.ledger.minted();
    f.ledger.submit_on_ledger(
        "alpha", "beta",
        {.from = "alpha/a", .to_contract = "beta/b", .kind = "m", .carried_assets = 30});
    // Debited immediately, credited on delivery; the in-flight amount still
    // counts toward the total.
    CHECK(f.ledger.balance("alpha/a") == 100 - 30 - 1);
    CHECK(f.ledger.balance("beta/b") == 100);
    CHECK(f.ledger.total_balances() + f.ledger.gas_sink() == minted);
    f.ledger.deliver(1);
    CHECK(f.ledger.balance("beta/b") == 130);
    CHECK(f.ledger.total_balances() + f.ledger.gas_sink() == minted);
    CHECK(f.ledger.gas_sink() == 1);
}

TEST_CASE("a zero-amount transfer is a legal no-op costing one L1 transaction") {
    Fixture f;
    f.ledger.cross_chain_transfer("alpha", "alpha/a", "beta",
                                  {.to_contract = "beta/b", .kind = "t", .carried_assets = 0});
    CHECK(f.ledger.l1_tx_count() == 1);
    f.ledger.deliver(1);
    CHECK(f.ledger.balance("alpha/a") == 99);  // gas only
    CHECK(f.ledger.balance("beta/b") == 100);
}

TEST_CASE("last write per key wins regardless of submission order") {
    Bytes first = to_bytes("first"), second = to_bytes("second");
    for (bool reversed : {false, true}) {
        TradeTrace trace;
        Ledger ledger(trace);
        ledger.add_chain("alpha", false);
        ledger.write_state("alpha", {"k", reversed ? second : first, WriteTag::Bookkeeping});
        ledger.write_state("alpha", {"k", reversed ? first : second, WriteTag::Bookkeeping});
        ledger.write_state("alpha", {"other", to_bytes("o"), WriteTag::Bookkeeping});
        ChainBlock block = ledger.produce_block("alpha", 0);
        REQUIRE(block.mutations.size() == 2);
        // Mutations come out key-sorted; "k" holds the later value.
        CHECK(block.mutations[0].key == "k");
        CHECK(block.mutations[0].value == (reversed ? first : second));
        CHECK(block.mutations[1].key == "other");
    }
}

TEST_CASE("anchors commit to state deterministically") {
    auto build = [](const std::string& value) {
        auto trace = std::make_unique<TradeTrace>();
        auto ledger = std::make_unique<Ledger>(*trace);
        ledger->add_chain("alpha", false);
        ledger->write_state("alpha", {"k", to_bytes(value), WriteTag::Bookkeeping});
        ledger->produce_block("alpha", 0);
        AnchorTx anchor = ledger->anchor_chain("alpha", 0);
        return anchor.commitment;
    };
    Digest same1 = build("v"), same2 = build("v"), different = build("w");
    CHECK(same1 == same2);
    CHECK(same1 != different);
    CHECK(same1.size() == 32);
}

TEST_CASE("anchor commitments have fixed observable size") {
    Fixture f;
    f.ledger.produce_block("alpha", 0);
    f.ledger.anchor_chain("alpha", 0);
    const TraceEvent& ev = f.trace.events.back();
    CHECK(ev.type == EventType::Anchor);
    CHECK(ev.payload_len == 32);
    CHECK(ev.l1_tx);
}

TEST_CASE("the L1 count equals on-ledger messages plus transfers plus anchors") {
    Fixture f;
    Rng rng(31);
    std::uint64_t on = 0, transfers = 0, anchors = 0;
    for (int i = 0; i < 60; ++i) {
        switch (rng.uniform(0, 3)) {
            case 0:
                f.ledger.submit_on_ledger("alpha", "beta",
                                          {.from = "alpha/a", .to_contract = "beta/b"});
                ++on;
                break;
            case 1:
                f.ledger.cross_chain_transfer("beta", "beta/b", "alpha",
                                              {.to_contract = "alpha/a", .carried_assets = 0});
                ++transfers;
                break;
            case 2:
                f.ledger.anchor_chain("alpha", i);
                ++anchors;
                break;
            default:
                f.ledger.submit_off_ledger("alpha",
                                           {.from = "wallet:w", .to_contract = "alpha/a"});
                break;
        }
    }
    CHECK(f.ledger.l1_tx_count() == on + transfers + anchors);
}

TEST_CASE("trace events survive the jsonl round trip") {
    Fixture f;
    f.ledger.submit_on_ledger("alpha", "beta",
                              {.from = "alpha/a", .to_contract = "beta/b", .kind = "m",
                               .payload = to_bytes("abc")});
    f.ledger.produce_block("alpha", 0);
    f.ledger.anchor_chain("alpha", 0);
    TradeTrace back = TradeTrace::from_jsonl(f.trace.to_jsonl());
    REQUIRE(back.events.size() == f.trace.events.size());
    for (std::size_t i = 0; i < back.events.size(); ++i) {
        CHECK(back.events[i].to_json() == f.trace.events[i].to_json());
    }
}
