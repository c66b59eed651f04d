#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "market/bytes.hpp"
#include "market/errors.hpp"
#include "market/trace.hpp"

namespace market {

enum class WriteTag { Ciphertext, Bookkeeping };

struct Mutation {
    std::string key;
    Bytes value;
    WriteTag tag = WriteTag::Bookkeeping;
};

struct ChainBlock {
    std::string chain;
    std::uint64_t height = 0;
    std::uint64_t epoch = 0;
    std::vector<Mutation> mutations;
};

struct AnchorTx {
    std::string chain;
    Digest commitment{};
    std::uint64_t epoch = 0;
};

/// A message addressed to a contract. Delivered at the start of the epoch
/// after submission. `corr` carries the trade/order correlation tag used for
/// post-run trace attribution; it is not visible to observers.
struct Message {
    std::string from;  // sender account (contract address or wallet id)
    std::string to_contract;
    std::string kind;
    Bytes payload;
    std::uint64_t carried_assets = 0;   // moved on L1; must be 0 off-ledger
    std::uint64_t instructed_amount = 0;  // wallet instruction, no funds moved
    std::string corr;
};

class Contract {
public:
    virtual ~Contract() = default;
    virtual void on_message(const Message& msg, std::uint64_t epoch) = 0;
};

struct GasTariff {
    std::uint64_t on_ledger = 1;
    std::uint64_t off_ledger = 0;
};

/// Simulated L1 DAG ledger plus L2 chains. A single logically-serialized
/// state machine: all submissions are queued and linearized by the epoch
/// scheduler; anything submitted in epoch e is delivered in epoch e+1.
class Ledger {
public:
    explicit Ledger(TradeTrace& trace, GasTariff tariff = {})
        : trace_(trace), tariff_(tariff) {}

    void add_chain(const std::string& chain_id, bool consortium);
    bool has_chain(const std::string& chain_id) const { return chains_.count(chain_id) > 0; }
    bool is_consortium(const std::string& chain_id) const;

    /// Contract addresses are "<chain>/<name>"; registration opens an account.
    void register_contract(const std::string& chain_id, const std::string& address,
                           Contract* contract);

    void mint(const std::string& owner, std::uint64_t amount);
    std::uint64_t balance(const std::string& owner) const;

    /// Wallet -> chain API call. No L1 transaction. Returns a receipt id.
    /// Throws UnknownChain / UnknownContract / InsufficientBalance (gas).
    std::string submit_off_ledger(const std::string& target_chain, Message msg);

    /// Contract call wrapped into an L1 transaction. Debits carried assets
    /// and gas from msg.from now; credits the target on delivery.
    std::string submit_on_ledger(const std::string& from_chain, const std::string& target_chain,
                                 Message msg);

    /// L1 asset transfer between contracts on different chains. Exactly one
    /// L1 transaction; amount 0 is a legal no-op transfer.
    std::string cross_chain_transfer(const std::string& from_chain,
                                     const std::string& from_account,
                                     const std::string& target_chain, Message msg);

    /// Pending state write, serialized into the chain's next block.
    void write_state(const std::string& chain_id, Mutation m);

    /// Deliver everything submitted before this epoch to contract inboxes.
    void deliver(std::uint64_t epoch);

    /// Serialize pending writes into a block (last write per key wins).
    ChainBlock produce_block(const std::string& chain_id, std::uint64_t epoch);

    /// Commit the chain's current key/value state onto L1 as a digest.
    AnchorTx anchor_chain(const std::string& chain_id, std::uint64_t epoch);

    bool pending_deliveries() const { return !pending_.empty(); }
    std::uint64_t l1_tx_count() const { return l1_tx_count_; }
    std::uint64_t gas_sink() const { return gas_sink_; }
    std::uint64_t minted() const { return minted_; }
    std::uint64_t total_balances() const;
    const std::map<std::string, std::uint64_t>& accounts() const { return accounts_; }

    const std::vector<ChainBlock>& blocks(const std::string& chain_id) const;
    const std::vector<AnchorTx>& anchors() const { return anchors_; }
    std::vector<std::string> chain_ids() const;

    TradeTrace& trace() { return trace_; }
    const GasTariff& tariff() const { return tariff_; }

    std::uint64_t current_epoch = 0;

private:
    struct Chain {
        bool consortium = false;
        std::map<std::string, Contract*> contracts;
        std::vector<Mutation> pending_writes;
        std::map<std::string, Bytes> state;
        std::vector<ChainBlock> blocks;
    };

    struct PendingDelivery {
        std::uint64_t deliver_epoch;
        std::string target_chain;
        Message msg;
    };

    Chain& chain_at(const std::string& chain_id);
    const Chain& chain_at(const std::string& chain_id) const;
    void charge(const std::string& owner, std::uint64_t amount, Errc errc);

    TradeTrace& trace_;
    GasTariff tariff_;
    std::map<std::string, Chain> chains_;
    std::map<std::string, std::uint64_t> accounts_;
    std::deque<PendingDelivery> pending_;
    std::vector<AnchorTx> anchors_;
    std::uint64_t l1_tx_count_ = 0;
    std::uint64_t gas_sink_ = 0;
    std::uint64_t in_flight_ = 0;  // carried assets debited but not yet delivered
    std::uint64_t minted_ = 0;
    std::uint64_t next_tx_ = 0;
};

}  // namespace market
