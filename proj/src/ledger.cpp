#include "market/ledger.hpp"

#include <algorithm>

namespace market {

void Ledger::add_chain(const std::string& chain_id, bool consortium) {
    chains_[chain_id].consortium = consortium;
}

bool Ledger::is_consortium(const std::string& chain_id) const {
    return chain_at(chain_id).consortium;
}

Ledger::Chain& Ledger::chain_at(const std::string& chain_id) {
    auto it = chains_.find(chain_id);
    if (it == chains_.end()) throw MarketError(Errc::UnknownChain, chain_id);
    return it->second;
}

const Ledger::Chain& Ledger::chain_at(const std::string& chain_id) const {
    auto it = chains_.find(chain_id);
    if (it == chains_.end()) throw MarketError(Errc::UnknownChain, chain_id);
    return it->second;
}

void Ledger::register_contract(const std::string& chain_id, const std::string& address,
                               Contract* contract) {
    chain_at(chain_id).contracts[address] = contract;
    accounts_.emplace(address, 0);
}

void Ledger::mint(const std::string& owner, std::uint64_t amount) {
    accounts_[owner] += amount;
    minted_ += amount;
}

std::uint64_t Ledger::balance(const std::string& owner) const {
    auto it = accounts_.find(owner);
    return it == accounts_.end() ? 0 : it->second;
}

void Ledger::charge(const std::string& owner, std::uint64_t amount, Errc errc) {
    if (amount == 0) return;
    auto it = accounts_.find(owner);
    if (it == accounts_.end() || it->second < amount)
        throw MarketError(errc, owner + " cannot cover " + std::to_string(amount));
    it->second -= amount;
}

std::string Ledger::submit_off_ledger(const std::string& target_chain, Message msg) {
    Chain& chain = chain_at(target_chain);
    if (!chain.contracts.count(msg.to_contract))
        throw MarketError(Errc::UnknownContract, msg.to_contract);
    if (msg.carried_assets != 0)
        throw MarketError(Errc::InvalidInput, "off-ledger requests cannot carry assets");

    charge(msg.from, tariff_.off_ledger, Errc::InsufficientBalance);
    gas_sink_ += tariff_.off_ledger;

    trace_.append({.epoch = current_epoch,
                   .type = EventType::OffLedger,
                   .chain = target_chain,
                   .target_chain = "",
                   .l1_tx = false,
                   .gas = tariff_.off_ledger,
                   .payload_len = msg.payload.size(),
                   .trade_id = msg.corr,
                   .note = msg.kind});

    pending_.push_back({current_epoch + 1, target_chain, std::move(msg)});
    return "off-" + std::to_string(next_tx_++);
}

std::string Ledger::submit_on_ledger(const std::string& from_chain,
                                     const std::string& target_chain, Message msg) {
    Chain& chain = chain_at(target_chain);
    if (!chain.contracts.count(msg.to_contract))
        throw MarketError(Errc::UnknownContract, msg.to_contract);

    charge(msg.from, msg.carried_assets + tariff_.on_ledger, Errc::InsufficientBalance);
    gas_sink_ += tariff_.on_ledger;
    in_flight_ += msg.carried_assets;
    ++l1_tx_count_;

    trace_.append({.epoch = current_epoch,
                   .type = EventType::OnLedger,
                   .chain = from_chain,
                   .target_chain = target_chain,
                   .l1_tx = true,
                   .gas = tariff_.on_ledger,
                   .payload_len = msg.payload.size(),
                   .trade_id = msg.corr,
                   .note = msg.kind});

    pending_.push_back({current_epoch + 1, target_chain, std::move(msg)});
    return "tx-" + std::to_string(next_tx_++);
}

std::string Ledger::cross_chain_transfer(const std::string& from_chain,
                                         const std::string& from_account,
                                         const std::string& target_chain, Message msg) {
    Chain& chain = chain_at(target_chain);
    if (!chain.contracts.count(msg.to_contract))
        throw MarketError(Errc::UnknownContract, msg.to_contract);

    msg.from = from_account;
    charge(from_account, msg.carried_assets + tariff_.on_ledger, Errc::InsufficientBalance);
    gas_sink_ += tariff_.on_ledger;
    in_flight_ += msg.carried_assets;
    ++l1_tx_count_;

    trace_.append({.epoch = current_epoch,
                   .type = EventType::Transfer,
                   .chain = from_chain,
                   .target_chain = target_chain,
                   .l1_tx = true,
                   .gas = tariff_.on_ledger,
                   .payload_len = msg.payload.size(),
                   .trade_id = msg.corr,
                   .note = msg.kind});

    pending_.push_back({current_epoch + 1, target_chain, std::move(msg)});
    return "tx-" + std::to_string(next_tx_++);
}

void Ledger::write_state(const std::string& chain_id, Mutation m) {
    chain_at(chain_id).pending_writes.push_back(std::move(m));
}

void Ledger::deliver(std::uint64_t epoch) {
    current_epoch = epoch;
    while (!pending_.empty() && pending_.front().deliver_epoch <= epoch) {
        PendingDelivery d = std::move(pending_.front());
        pending_.pop_front();
        Chain& chain = chain_at(d.target_chain);
        auto it = chain.contracts.find(d.msg.to_contract);
        if (it == chain.contracts.end()) continue;  // contract checked at submission
        accounts_[d.msg.to_contract] += d.msg.carried_assets;
        in_flight_ -= d.msg.carried_assets;
        it->second->on_message(d.msg, epoch);
    }
}

ChainBlock Ledger::produce_block(const std::string& chain_id, std::uint64_t epoch) {
    Chain& chain = chain_at(chain_id);

    // Last write per key wins; mutations ordered by key for determinism.
    std::map<std::string, Mutation> latest;
    for (Mutation& m : chain.pending_writes) latest[m.key] = std::move(m);
    chain.pending_writes.clear();

    ChainBlock block{.chain = chain_id, .height = chain.blocks.size(), .epoch = epoch};
    std::size_t total_len = 0;
    for (auto& [key, m] : latest) {
        chain.state[key] = m.value;
        total_len += m.value.size();
        block.mutations.push_back(std::move(m));
    }
    chain.blocks.push_back(block);

    trace_.append({.epoch = epoch,
                   .type = EventType::Block,
                   .chain = chain_id,
                   .target_chain = "",
                   .l1_tx = false,
                   .gas = 0,
                   .payload_len = total_len,
                   .trade_id = "",
                   .note = "height=" + std::to_string(block.height)});
    return block;
}

AnchorTx Ledger::anchor_chain(const std::string& chain_id, std::uint64_t epoch) {
    const Chain& chain = chain_at(chain_id);
    Bytes material = to_bytes(chain_id);
    for (const auto& [key, value] : chain.state) {
        material.insert(material.end(), key.begin(), key.end());
        material.push_back(0);
        material.insert(material.end(), value.begin(), value.end());
        material.push_back(0);
    }
    AnchorTx anchor{.chain = chain_id, .commitment = hash32(material), .epoch = epoch};
    anchors_.push_back(anchor);
    ++l1_tx_count_;

    trace_.append({.epoch = epoch,
                   .type = EventType::Anchor,
                   .chain = chain_id,
                   .target_chain = "l1",
                   .l1_tx = true,
                   .gas = 0,
                   .payload_len = anchor.commitment.size(),
                   .trade_id = "",
                   .note = "anchor"});
    return anchor;
}

std::uint64_t Ledger::total_balances() const {
    std::uint64_t sum = in_flight_;
    for (const auto& [owner, bal] : accounts_) sum += bal;
    return sum;
}

const std::vector<ChainBlock>& Ledger::blocks(const std::string& chain_id) const {
    return chain_at(chain_id).blocks;
}

std::vector<std::string> Ledger::chain_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, chain] : chains_) ids.push_back(id);
    return ids;
}

}  // namespace market
