#include "market/broker.hpp"

#include <algorithm>

namespace market {

namespace {

std::string chain_of(const std::string& contract_address) {
    auto pos = contract_address.find('/');
    return pos == std::string::npos ? contract_address : contract_address.substr(0, pos);
}

bool windows_overlap(const DataDescription& a, const DataDescription& b) {
    return a.window_start <= b.window_end && b.window_start <= a.window_end;
}

}  // namespace

nlohmann::json DataDescription::to_json() const {
    return nlohmann::json{
        {"sensor_type", market::to_string(sensor_type)},
        {"region", region},
        {"volume", volume},
        {"window_start", window_start},
        {"window_end", window_end},
    };
}

DataDescription DataDescription::from_json(const nlohmann::json& j) {
    DataDescription dd;
    dd.sensor_type = sensor_type_from_string(j.at("sensor_type").get<std::string>());
    dd.region = j.at("region").get<std::string>();
    dd.volume = j.at("volume").get<std::uint64_t>();
    dd.window_start = j.at("window_start").get<std::uint64_t>();
    dd.window_end = j.at("window_end").get<std::uint64_t>();
    return dd;
}

std::uint64_t PriceTable::at(SensorType t) const {
    auto it = basic_price.find(t);
    if (it == basic_price.end())
        throw MarketError(Errc::InvalidInput, "no basic price for " + market::to_string(t));
    return it->second;
}

nlohmann::json PriceTable::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [type, price] : basic_price) j[market::to_string(type)] = price;
    return j;
}

PriceTable PriceTable::from_json(const nlohmann::json& j) {
    PriceTable table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::uint64_t price = it.value().get<std::uint64_t>();
        if (price == 0) throw MarketError(Errc::ConfigParse, "basic price must be positive");
        table.basic_price[sensor_type_from_string(it.key())] = price;
    }
    return table;
}

std::uint64_t compute_price(std::uint64_t basic_price, std::uint64_t volume) {
    if (basic_price == 0 || volume == 0)
        throw MarketError(Errc::InvalidInput, "price and volume must be positive");
    if (basic_price > UINT64_MAX / volume)
        throw MarketError(Errc::InvalidInput, "price overflow");
    return basic_price * volume;
}

nlohmann::json Invoice::to_json() const {
    return nlohmann::json{{"trade_id", trade_id}, {"price", price}, {"pay_to", pay_to}};
}

Invoice Invoice::from_json(const nlohmann::json& j) {
    return Invoice{j.at("trade_id").get<std::string>(), j.at("price").get<std::uint64_t>(),
                   j.at("pay_to").get<std::string>()};
}

const char* trade_state_name(TradeState s) {
    switch (s) {
        case TradeState::Matched: return "Matched";
        case TradeState::Invoiced: return "Invoiced";
        case TradeState::Paid: return "Paid";
        case TradeState::SellerNotified: return "SellerNotified";
        case TradeState::Delivered: return "Delivered";
        case TradeState::Scored: return "Scored";
        case TradeState::Settled: return "Settled";
        case TradeState::Expired: return "Expired";
    }
    return "Unknown";
}

std::vector<std::pair<std::size_t, std::size_t>> match_orders(
    const std::vector<SellOrder>& sells, const std::vector<BuyOrder>& buys,
    const ReputationTable& reputation) {
    auto mean_of = [&](const std::string& contract) {
        auto it = reputation.find(contract);
        return it == reputation.end() ? 0.0 : it->second.mean();
    };

    std::vector<std::size_t> buy_order(buys.size());
    for (std::size_t i = 0; i < buys.size(); ++i) buy_order[i] = i;
    std::sort(buy_order.begin(), buy_order.end(), [&](std::size_t a, std::size_t b) {
        if (buys[a].admission_epoch != buys[b].admission_epoch)
            return buys[a].admission_epoch < buys[b].admission_epoch;
        return buys[a].order_seq < buys[b].order_seq;
    });

    std::vector<bool> sell_taken(sells.size(), false);
    std::vector<std::pair<std::size_t, std::size_t>> matches;
    for (std::size_t bi : buy_order) {
        const BuyOrder& buy = buys[bi];
        std::optional<std::size_t> best;
        for (std::size_t si = 0; si < sells.size(); ++si) {
            if (sell_taken[si]) continue;
            const SellOrder& sell = sells[si];
            if (sell.dd.sensor_type != buy.dd.sensor_type) continue;
            if (buy.dd.region != "*" && sell.dd.region != buy.dd.region) continue;
            if (sell.dd.volume < buy.dd.volume) continue;
            if (!windows_overlap(sell.dd, buy.dd)) continue;
            if (!best) {
                best = si;
                continue;
            }
            const SellOrder& cur = sells[*best];
            double m_new = mean_of(sell.origin_contract);
            double m_cur = mean_of(cur.origin_contract);
            if (m_new != m_cur) {
                if (m_new > m_cur) best = si;
            } else if (sell.admission_epoch != cur.admission_epoch) {
                if (sell.admission_epoch < cur.admission_epoch) best = si;
            } else if (sell.order_seq < cur.order_seq) {
                best = si;
            }
        }
        if (best) {
            sell_taken[*best] = true;
            matches.emplace_back(*best, bi);
        }
    }
    return matches;
}

BrokerContract::BrokerContract(Ledger& ledger, std::string chain_id, std::string address,
                               crypto::KeyPair keys, Config config, Rng rng)
    : ledger_(ledger),
      chain_id_(std::move(chain_id)),
      address_(std::move(address)),
      keys_(std::move(keys)),
      config_(std::move(config)),
      rng_(std::move(rng)) {}

const Trade* BrokerContract::find_trade(const std::string& id) const {
    auto it = trades_.find(id);
    return it == trades_.end() ? nullptr : &it->second;
}

crypto::Ciphertext BrokerContract::encrypt_to(const Bytes& pk, const nlohmann::json& body) const {
    return crypto::hybrid_encrypt(pk, to_bytes(body.dump()), config_.padding_buckets);
}

nlohmann::json BrokerContract::decrypt_json(const Bytes& blob) const {
    Bytes plain = crypto::hybrid_decrypt(keys_, crypto::Ciphertext{blob, blob.size()});
    try {
        return nlohmann::json::parse(plain.begin(), plain.end());
    } catch (const nlohmann::json::exception&) {
        throw MarketError(Errc::DecryptFailure, "payload is not a protocol message");
    }
}

void BrokerContract::record_error(Errc code, std::uint64_t epoch, const std::string& corr,
                                  const std::string& detail) {
    ledger_.write_state(chain_id_, {"errors/" + std::to_string(epoch) + "/" + corr,
                                    to_bytes(errc_name(code)), WriteTag::Bookkeeping});
    TraceEvent ev;
    ev.epoch = epoch;
    ev.type = EventType::Error;
    ev.chain = chain_id_;
    ev.trade_id = corr;
    ev.note = std::string(errc_name(code)) + (detail.empty() ? "" : ": " + detail);
    ledger_.trace().append(std::move(ev));
}

void BrokerContract::transition(Trade& trade, TradeState next, std::uint64_t epoch) {
    trade.state = next;
    trade.last_transition_epoch = epoch;
    ledger_.write_state(chain_id_, {"trade/" + trade.id + "/state",
                                    to_bytes(std::string(trade_state_name(next))),
                                    WriteTag::Bookkeeping});
}

void BrokerContract::queue_out(Message msg, const std::string& target_chain, bool transfer) {
    outbound_.push_back({std::move(msg), target_chain, transfer});
}

void BrokerContract::on_message(const Message& msg, std::uint64_t epoch) {
    if (msg.kind == "sell_request") {
        handle_sell_request(msg, epoch);
    } else if (msg.kind == "buy_request") {
        handle_buy_request(msg, epoch);
    } else if (msg.kind == "seller_confirm") {
        handle_seller_confirm(msg, epoch);
    } else if (msg.kind == "payment") {
        handle_payment(msg, epoch);
    } else if (msg.kind == "delivery") {
        handle_delivery(msg, epoch);
    } else if (msg.kind == "score") {
        handle_score(msg, epoch);
    } else {
        record_error(Errc::StateError, epoch, msg.corr, "unknown message kind " + msg.kind);
    }
}

void BrokerContract::handle_sell_request(const Message& msg, std::uint64_t epoch) {
    nlohmann::json body;
    SellOrder order;
    try {
        body = decrypt_json(msg.payload);
        order.dd = DataDescription::from_json(body.at("dd"));
        order.cert = Certificate::from_json(body.at("cert"));
        order.seller_nonce = crypto::Nonce::from_hex(body.at("id_s").get<std::string>());
        order.seller_pubkey = from_hex(body.at("ku_seller").get<std::string>());
    } catch (const MarketError& e) {
        record_error(Errc::DecryptFailure, epoch, msg.corr, e.what());
        return;
    } catch (const nlohmann::json::exception& e) {
        record_error(Errc::DecryptFailure, epoch, msg.corr, e.what());
        return;
    }
    order.origin_contract = msg.from;

    if (epoch >= order.cert.expires_at) {
        record_error(Errc::CertExpired, epoch, msg.corr, "certificate expired");
        return;
    }
    if (!verify_certificate(order.cert, config_.trusted_issuers, epoch)) {
        record_error(Errc::CertInvalid, epoch, msg.corr, "certificate rejected");
        return;
    }
    if (order.cert.sensor_type != order.dd.sensor_type) {
        record_error(Errc::SensorTypeMismatch, epoch, msg.corr,
                     "certificate covers " + market::to_string(order.cert.sensor_type));
        return;
    }
    if (order.dd.volume == 0 || order.dd.window_end < order.dd.window_start) {
        record_error(Errc::InvalidDD, epoch, msg.corr, "malformed data description");
        return;
    }
    if (!seen_sell_keys_.insert({order.origin_contract, order.seller_nonce}).second) {
        record_error(Errc::DuplicateOrder, epoch, msg.corr, "replayed sell request");
        return;
    }

    order.admission_epoch = epoch;
    order.order_seq = next_order_seq_++;
    order.corr = msg.corr;
    sells_.push_back(std::move(order));
}

void BrokerContract::handle_buy_request(const Message& msg, std::uint64_t epoch) {
    nlohmann::json body;
    BuyOrder order;
    try {
        body = decrypt_json(msg.payload);
        order.dd = DataDescription::from_json(body.at("dd"));
        order.buyer_nonce = crypto::Nonce::from_hex(body.at("id_b").get<std::string>());
        order.buyer_pubkey = from_hex(body.at("ku_buyer").get<std::string>());
    } catch (const MarketError& e) {
        record_error(Errc::DecryptFailure, epoch, msg.corr, e.what());
        return;
    } catch (const nlohmann::json::exception& e) {
        record_error(Errc::DecryptFailure, epoch, msg.corr, e.what());
        return;
    }
    order.origin_contract = msg.from;

    if (order.dd.volume == 0 || order.dd.window_end < order.dd.window_start) {
        record_error(Errc::InvalidDD, epoch, msg.corr, "malformed data description");
        return;
    }
    if (!seen_buy_keys_.insert({order.origin_contract, order.buyer_nonce}).second) {
        record_error(Errc::DuplicateOrder, epoch, msg.corr, "replayed buy request");
        return;
    }

    order.admission_epoch = epoch;
    order.order_seq = next_order_seq_++;
    order.corr = msg.corr;
    buys_.push_back(std::move(order));
}

void BrokerContract::issue_invoice(Trade& trade, std::uint64_t epoch) {
    if (trade.state != TradeState::Matched)
        throw MarketError(Errc::StateError, "invoice for trade in state " +
                                                std::string(trade_state_name(trade.state)));
    Invoice invoice{trade.id, trade.price, address_};
    if (config_.inflate_invoice_for.count(trade.buy.origin_contract)) invoice.price += 1;

    queue_out({.from = address_,
               .to_contract = trade.buy.origin_contract,
               .kind = "invoice",
               .payload = encrypt_to(trade.buy.buyer_pubkey, invoice.to_json()).blob,
               .corr = trade.id},
              chain_of(trade.buy.origin_contract));
    transition(trade, TradeState::Invoiced, epoch);
}

void BrokerContract::handle_seller_confirm(const Message& msg, std::uint64_t epoch) {
    nlohmann::json body;
    try {
        body = decrypt_json(msg.payload);
    } catch (const MarketError& e) {
        record_error(Errc::DecryptFailure, epoch, msg.corr, e.what());
        return;
    }
    auto it = trades_.find(body.value("trade_id", ""));
    if (it == trades_.end() || !it->second.awaiting_seller_confirm ||
        it->second.state != TradeState::Matched) {
        record_error(Errc::StateError, epoch, msg.corr, "unexpected seller confirmation");
        return;
    }
    it->second.awaiting_seller_confirm = false;
    issue_invoice(it->second, epoch);
}

void BrokerContract::handle_payment(const Message& msg, std::uint64_t epoch) {
    nlohmann::json body;
    try {
        body = decrypt_json(msg.payload);
    } catch (const MarketError& e) {
        record_error(Errc::DecryptFailure, epoch, msg.corr, e.what());
        return;
    }
    std::string trade_id = body.value("trade_id", "");
    std::uint64_t amount = msg.carried_assets;

    auto it = trades_.find(trade_id);
    if (it == trades_.end()) {
        record_error(Errc::StateError, epoch, msg.corr, "payment for unknown trade");
        refund(msg.from, amount, msg.corr);
        return;
    }
    Trade& trade = it->second;
    if (trade.state != TradeState::Invoiced) {
        record_error(Errc::StateError, epoch, trade.id, "payment in state " +
                                                            std::string(trade_state_name(trade.state)));
        refund(msg.from, amount, trade.id);
        return;
    }
    if (amount != trade.price) {
        record_error(Errc::WrongAmount, epoch, trade.id,
                     "expected " + std::to_string(trade.price) + " got " + std::to_string(amount));
        refund(trade.buy.origin_contract, amount, trade.id);
        return;
    }

    trade.escrow = amount;
    transition(trade, TradeState::Paid, epoch);
    notify_seller(trade, epoch);
}

void BrokerContract::refund(const std::string& to_contract, std::uint64_t amount,
                            const std::string& corr) {
    if (to_contract.find('/') == std::string::npos) return;
    // The refund transfer's gas comes out of the held amount.
    std::uint64_t gas = ledger_.tariff().on_ledger;
    if (amount <= gas) return;
    queue_out({.from = address_,
               .to_contract = to_contract,
               .kind = "refund",
               .payload = {},
               .carried_assets = amount - gas,
               .corr = corr},
              chain_of(to_contract), /*transfer=*/true);
}

void BrokerContract::notify_seller(Trade& trade, std::uint64_t epoch) {
    if (trade.state != TradeState::Paid)
        throw MarketError(Errc::StateError, "notify for trade in state " +
                                                std::string(trade_state_name(trade.state)));
    crypto::Nonce id_s = trade.sell.seller_nonce;
    if (config_.stale_notice_for.count(trade.sell.origin_contract))
        id_s = crypto::make_nonce(rng_);  // injected stale nonce

    nlohmann::json body{{"ku_buyer", to_hex(trade.buy.buyer_pubkey)},
                        {"id_b", trade.buy.buyer_nonce.hex()},
                        {"id_s", id_s.hex()}};
    queue_out({.from = address_,
               .to_contract = trade.sell.origin_contract,
               .kind = "notice",
               .payload = encrypt_to(trade.sell.seller_pubkey, body).blob,
               .corr = trade.id},
              chain_of(trade.sell.origin_contract));
    transition(trade, TradeState::SellerNotified, epoch);
}

void BrokerContract::handle_delivery(const Message& msg, std::uint64_t epoch) {
    Trade* target = nullptr;
    for (auto& [id, trade] : trades_)
        if (trade.sell.origin_contract == msg.from && trade.state == TradeState::SellerNotified) {
            target = &trade;
            break;
        }
    if (!target) {
        record_error(Errc::StateError, epoch, msg.corr, "no trade awaiting delivery from " + msg.from);
        return;
    }

    // Opaque relay: the ciphertext is forwarded byte-identical.
    queue_out({.from = address_,
               .to_contract = target->buy.origin_contract,
               .kind = "relay",
               .payload = msg.payload,
               .corr = target->id},
              chain_of(target->buy.origin_contract));
    target->delivery_epoch = epoch;
    transition(*target, TradeState::Delivered, epoch);
}

void BrokerContract::handle_score(const Message& msg, std::uint64_t epoch) {
    nlohmann::json body;
    try {
        body = decrypt_json(msg.payload);
    } catch (const MarketError& e) {
        record_error(Errc::DecryptFailure, epoch, msg.corr, e.what());
        return;
    }
    auto it = trades_.find(body.value("trade_id", ""));
    if (it == trades_.end()) {
        record_error(Errc::StateError, epoch, msg.corr, "score for unknown trade");
        return;
    }
    Trade& trade = it->second;
    if (trade.state != TradeState::Delivered && trade.state != TradeState::Settled) {
        record_error(Errc::StateError, epoch, trade.id, "score in state " +
                                                            std::string(trade_state_name(trade.state)));
        return;
    }
    std::int64_t score = body.value("score", std::int64_t{-1});
    if (score < 0 || score > 100) {
        record_error(Errc::ScoreOutOfRange, epoch, trade.id, std::to_string(score));
        return;
    }

    ReputationEntry& entry = reputation_[trade.sell.origin_contract];
    entry.score_sum += static_cast<std::uint64_t>(score);
    entry.score_count += 1;
    ledger_.write_state(chain_id_,
                        {"rep/" + trade.sell.origin_contract,
                         to_bytes(nlohmann::json{{"score_sum", entry.score_sum},
                                                 {"score_count", entry.score_count}}
                                      .dump()),
                         WriteTag::Bookkeeping});
    if (trade.state == TradeState::Delivered) transition(trade, TradeState::Scored, epoch);
}

void BrokerContract::settle(Trade& trade, std::uint64_t epoch) {
    if (trade.state != TradeState::Delivered && trade.state != TradeState::Scored)
        throw MarketError(Errc::StateError, "settle for trade in state " +
                                                std::string(trade_state_name(trade.state)));
    nlohmann::json body{{"id_s", trade.sell.seller_nonce.hex()}, {"amount", trade.price}};
    queue_out({.from = address_,
               .to_contract = trade.sell.origin_contract,
               .kind = "settlement",
               .payload = encrypt_to(trade.sell.seller_pubkey, body).blob,
               .carried_assets = trade.price,
               .corr = trade.id},
              chain_of(trade.sell.origin_contract), /*transfer=*/true);
    trade.escrow = 0;
    transition(trade, TradeState::Settled, epoch);
}

void BrokerContract::expire(Trade& trade, std::uint64_t epoch) {
    if (trade.escrow > 0) {
        refund(trade.buy.origin_contract, trade.escrow, trade.id);
        trade.escrow = 0;
    }
    // Tell the waiting seller the trade is dead so it can stop waiting.
    nlohmann::json body{{"id_s", trade.sell.seller_nonce.hex()}};
    queue_out({.from = address_,
               .to_contract = trade.sell.origin_contract,
               .kind = "expired",
               .payload = encrypt_to(trade.sell.seller_pubkey, body).blob,
               .corr = trade.id},
              chain_of(trade.sell.origin_contract));
    transition(trade, TradeState::Expired, epoch);
}

void BrokerContract::end_epoch(std::uint64_t epoch) {
    // 1. Match the current book.
    auto matches = match_orders(sells_, buys_, reputation_);
    std::vector<bool> sell_used(sells_.size(), false), buy_used(buys_.size(), false);
    for (auto [si, bi] : matches) {
        char id_buf[16];
        std::snprintf(id_buf, sizeof(id_buf), "trade-%04llu",
                      static_cast<unsigned long long>(next_trade_++));
        Trade trade;
        trade.id = id_buf;
        trade.sell = sells_[si];
        trade.buy = buys_[bi];
        trade.price = compute_price(config_.prices.at(trade.buy.dd.sensor_type),
                                    trade.buy.dd.volume);
        trade.state = TradeState::Matched;
        trade.last_transition_epoch = epoch;
        sell_used[si] = true;
        buy_used[bi] = true;

        auto [it, inserted] = trades_.emplace(trade.id, std::move(trade));
        transition(it->second, TradeState::Matched, epoch);
        if (config_.seller_choice) {
            it->second.awaiting_seller_confirm = true;
            nlohmann::json offer{{"id_s", it->second.sell.seller_nonce.hex()},
                                 {"trade_id", it->second.id}};
            queue_out({.from = address_,
                       .to_contract = it->second.sell.origin_contract,
                       .kind = "offer",
                       .payload = encrypt_to(it->second.sell.seller_pubkey, offer).blob,
                       .corr = it->second.id},
                      chain_of(it->second.sell.origin_contract));
        } else {
            issue_invoice(it->second, epoch);
        }
    }
    auto erase_used = [](auto& orders, const std::vector<bool>& used) {
        std::size_t w = 0;
        for (std::size_t i = 0; i < orders.size(); ++i) {
            if (used[i]) continue;
            if (w != i) orders[w] = std::move(orders[i]);  // guard against self-move
            ++w;
        }
        orders.resize(w);
    };
    erase_used(sells_, sell_used);
    erase_used(buys_, buy_used);

    // 2. Settlement and expiry sweep.
    for (auto& [id, trade] : trades_) {
        switch (trade.state) {
            case TradeState::Scored:
                settle(trade, epoch);
                break;
            case TradeState::Delivered:
                if (epoch >= trade.delivery_epoch + config_.score_timeout) settle(trade, epoch);
                break;
            case TradeState::Matched:
            case TradeState::Invoiced:
            case TradeState::Paid:
            case TradeState::SellerNotified:
                if (epoch >= trade.last_transition_epoch + config_.abandon_timeout)
                    expire(trade, epoch);
                break;
            case TradeState::Settled:
            case TradeState::Expired:
                break;
        }
    }

    // Drop unmatched orders that have been sitting past the abandon window.
    std::erase_if(sells_, [&](const SellOrder& o) {
        return epoch >= o.admission_epoch + config_.abandon_timeout;
    });
    std::erase_if(buys_, [&](const BuyOrder& o) {
        return epoch >= o.admission_epoch + config_.abandon_timeout;
    });

    // 3. Flush the outbound batch. Batching releases the whole epoch's
    //    output in one shuffled burst, breaking submission-order linkage.
    if (config_.batching) rng_.shuffle(outbound_);
    for (Outbound& out : outbound_) {
        if (out.transfer)
            ledger_.cross_chain_transfer(chain_id_, address_, out.target_chain,
                                         std::move(out.msg));
        else
            ledger_.submit_on_ledger(chain_id_, out.target_chain, std::move(out.msg));
    }
    outbound_.clear();
}

bool BrokerContract::idle() const {
    if (!sells_.empty() || !buys_.empty() || !outbound_.empty()) return false;
    for (const auto& [id, trade] : trades_)
        if (trade.state != TradeState::Settled && trade.state != TradeState::Expired) return false;
    return true;
}

nlohmann::json BrokerContract::reputation_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [contract, entry] : reputation_)
        arr.push_back(nlohmann::json{{"seller_contract_id", contract},
                                     {"score_count", entry.score_count},
                                     {"mean", entry.mean()}});
    return arr;
}

std::map<std::string, std::pair<std::string, std::string>> BrokerContract::correlation_map()
    const {
    std::map<std::string, std::pair<std::string, std::string>> out;
    for (const auto& [id, trade] : trades_) out[id] = {trade.sell.corr, trade.buy.corr};
    return out;
}

}  // namespace market
