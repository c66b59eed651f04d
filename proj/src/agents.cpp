#include "market/agents.hpp"

namespace market {

namespace {

std::string chain_of(const std::string& contract_address) {
    auto pos = contract_address.find('/');
    return pos == std::string::npos ? contract_address : contract_address.substr(0, pos);
}

std::string corr_tag(const char* side, const std::string& contract, const crypto::Nonce& n) {
    return std::string(side) + ":" + contract + ":" + to_hex(hash32(n.value)).substr(0, 16);
}

void trace_alert(Ledger& ledger, const std::string& chain, std::uint64_t epoch, Errc code,
                 const std::string& corr, const std::string& detail) {
    TraceEvent ev;
    ev.epoch = epoch;
    ev.type = EventType::Alert;
    ev.chain = chain;
    ev.trade_id = corr;
    ev.note = std::string(errc_name(code)) + (detail.empty() ? "" : ": " + detail);
    ledger.trace().append(std::move(ev));
}

}  // namespace

void UserContract::on_message(const Message& msg, std::uint64_t epoch) {
    (void)epoch;
    if (!msg.payload.empty()) {
        ledger_.write_state(chain_id_, {address_ + "/in/" + std::to_string(write_seq_++),
                                        msg.payload, WriteTag::Ciphertext});
    }

    if (msg.kind == "sell_request" || msg.kind == "buy_request" || msg.kind == "delivery" ||
        msg.kind == "score" || msg.kind == "seller_confirm") {
        Message fwd = msg;
        fwd.from = address_;
        fwd.instructed_amount = 0;
        ledger_.submit_on_ledger(chain_id_, broker_chain_,
                                 {.from = address_,
                                  .to_contract = broker_address_,
                                  .kind = msg.kind,
                                  .payload = msg.payload,
                                  .corr = msg.corr});
    } else if (msg.kind == "pay_invoice") {
        ledger_.cross_chain_transfer(chain_id_, address_, broker_chain_,
                                     {.from = address_,
                                      .to_contract = broker_address_,
                                      .kind = "payment",
                                      .payload = msg.payload,
                                      .carried_assets = msg.instructed_amount,
                                      .corr = msg.corr});
    } else {
        // Inbound from the broker: invoice, notice, relay, offer, settlement, refund.
        if (deliver_to_owner_) deliver_to_owner_(msg);
    }
}

SellerAgent::SellerAgent(Init init, Rng rng, Ledger& ledger, BlobStore& store,
                         FreshnessRegistry* registry)
    : init_(std::move(init)),
      rng_(std::move(rng)),
      ledger_(ledger),
      store_(store),
      registry_(registry) {}

void SellerAgent::alert(Errc code, std::uint64_t epoch, const std::string& detail) {
    trace_alert(ledger_, chain_of(init_.contract_address), epoch, code, corr_, detail);
}

Bytes SellerAgent::generate_sensor_data() {
    PlausibilityRange range = plausibility_range(init_.dd.sensor_type);
    nlohmann::json readings = nlohmann::json::array();
    for (std::uint64_t i = 0; i < init_.dd.volume; ++i)
        readings.push_back(rng_.uniform_real(range.lo, range.hi));
    return to_bytes(readings.dump());
}

void SellerAgent::step(std::uint64_t epoch) {
    std::vector<Message> inbox;
    inbox.swap(mailbox_);
    for (const Message& msg : inbox) {
        if (msg.kind == "notice")
            handle_notice(msg, epoch);
        else if (msg.kind == "offer")
            handle_offer(msg, epoch);
        else if (msg.kind == "settlement")
            handle_settlement(msg, epoch);
        else if (msg.kind == "expired")
            handle_expired(msg, epoch);
    }

    if (pending_replay_ && state_ != State::Idle) {
        ledger_.submit_off_ledger(chain_of(init_.contract_address), *pending_replay_);
        pending_replay_.reset();
    }

    if (state_ == State::Idle && trades_done_ < init_.n_trades && epoch >= init_.start_epoch)
        start_trade(epoch);
}

void SellerAgent::start_trade(std::uint64_t epoch) {
    if (epoch >= init_.cert.expires_at) {
        // Local refusal before any network traffic.
        alert(Errc::CertExpiredLocally, epoch, "certificate expired at " +
                                                   std::to_string(init_.cert.expires_at));
        state_ = State::Aborted;
        return;
    }

    trade_keys_ = crypto::keygen(rng_);
    id_s_ = crypto::make_nonce(rng_);
    if (registry_) {
        registry_->add_pubkey(trade_keys_.public_key, init_.id);
        registry_->add_nonce(id_s_, init_.id);
    }
    corr_ = corr_tag("s", init_.contract_address, id_s_);
    records_.push_back({.id_s = id_s_});

    nlohmann::json body{{"dd", init_.dd.to_json()},
                        {"cert", init_.cert.to_json()},
                        {"id_s", id_s_.hex()},
                        {"ku_seller", to_hex(trade_keys_.public_key)}};
    crypto::Ciphertext c =
        crypto::hybrid_encrypt(init_.broker_pubkey, to_bytes(body.dump()), init_.padding_buckets);

    Message msg{.from = init_.wallet,
                .to_contract = init_.contract_address,
                .kind = "sell_request",
                .payload = c.blob,
                .corr = corr_};
    ledger_.submit_off_ledger(chain_of(init_.contract_address), msg);
    state_ = State::Requested;

    if (init_.fault_replay_request) {
        Message replay = msg;
        replay.corr = corr_ + "#replay";
        pending_replay_ = std::move(replay);
        init_.fault_replay_request = false;
    }
}

void SellerAgent::handle_notice(const Message& msg, std::uint64_t epoch) {
    if (state_ != State::Requested) {
        alert(Errc::StateError, epoch, "notice in state");
        return;
    }
    nlohmann::json body;
    try {
        Bytes plain = crypto::hybrid_decrypt(trade_keys_, {msg.payload, msg.payload.size()});
        body = nlohmann::json::parse(plain.begin(), plain.end());
    } catch (const std::exception& e) {
        alert(Errc::DecryptFailure, epoch, e.what());
        return;
    }
    crypto::Nonce got = crypto::Nonce::from_hex(body.at("id_s").get<std::string>());
    if (got != id_s_) {
        alert(Errc::NonceMismatch, epoch, "notice carries foreign nonce");
        state_ = State::Aborted;
        return;
    }
    ku_buyer_ = from_hex(body.at("ku_buyer").get<std::string>());
    id_b_ = crypto::Nonce::from_hex(body.at("id_b").get<std::string>());
    state_ = State::Notified;

    // Step straight into delivery: encrypt, store, hand the address over.
    Bytes raw = generate_sensor_data();
    crypto::SymmetricKey k_s = crypto::make_symmetric_key(rng_);
    Bytes blob = crypto::sym_encrypt(k_s, raw);
    ContentAddress addr = store_.put(std::move(blob));

    records_.back().raw_data = raw;
    records_.back().sym_key = k_s;
    records_.back().delivered = true;

    crypto::SymmetricKey advertised = k_s;
    if (init_.fault_wrong_sym_key) advertised = crypto::make_symmetric_key(rng_);

    nlohmann::json delivery{{"id_b", id_b_.hex()},
                            {"address", addr.hex()},
                            {"k_s", advertised.hex()}};
    crypto::Ciphertext c =
        crypto::hybrid_encrypt(ku_buyer_, to_bytes(delivery.dump()), init_.padding_buckets);
    ledger_.submit_off_ledger(chain_of(init_.contract_address),
                              {.from = init_.wallet,
                               .to_contract = init_.contract_address,
                               .kind = "delivery",
                               .payload = c.blob,
                               .corr = corr_});
    state_ = State::DeliverySent;
}

void SellerAgent::handle_offer(const Message& msg, std::uint64_t epoch) {
    nlohmann::json body;
    try {
        Bytes plain = crypto::hybrid_decrypt(trade_keys_, {msg.payload, msg.payload.size()});
        body = nlohmann::json::parse(plain.begin(), plain.end());
    } catch (const std::exception& e) {
        alert(Errc::DecryptFailure, epoch, e.what());
        return;
    }
    if (crypto::Nonce::from_hex(body.at("id_s").get<std::string>()) != id_s_) {
        alert(Errc::NonceMismatch, epoch, "offer carries foreign nonce");
        return;
    }
    nlohmann::json confirm{{"trade_id", body.at("trade_id").get<std::string>()}};
    crypto::Ciphertext c =
        crypto::hybrid_encrypt(init_.broker_pubkey, to_bytes(confirm.dump()),
                               init_.padding_buckets);
    ledger_.submit_off_ledger(chain_of(init_.contract_address),
                              {.from = init_.wallet,
                               .to_contract = init_.contract_address,
                               .kind = "seller_confirm",
                               .payload = c.blob,
                               .corr = corr_});
}

void SellerAgent::handle_settlement(const Message& msg, std::uint64_t epoch) {
    nlohmann::json body;
    try {
        Bytes plain = crypto::hybrid_decrypt(trade_keys_, {msg.payload, msg.payload.size()});
        body = nlohmann::json::parse(plain.begin(), plain.end());
    } catch (const std::exception& e) {
        alert(Errc::DecryptFailure, epoch, e.what());
        return;
    }
    if (crypto::Nonce::from_hex(body.at("id_s").get<std::string>()) != id_s_) {
        alert(Errc::NonceMismatch, epoch, "settlement carries foreign nonce");
        return;
    }
    records_.back().settled = true;
    ++trades_done_;
    state_ = trades_done_ < init_.n_trades ? State::Idle : State::Settled;
}

void SellerAgent::handle_expired(const Message& msg, std::uint64_t epoch) {
    nlohmann::json body;
    try {
        Bytes plain = crypto::hybrid_decrypt(trade_keys_, {msg.payload, msg.payload.size()});
        body = nlohmann::json::parse(plain.begin(), plain.end());
    } catch (const std::exception& e) {
        alert(Errc::DecryptFailure, epoch, e.what());
        return;
    }
    if (crypto::Nonce::from_hex(body.at("id_s").get<std::string>()) != id_s_) {
        alert(Errc::NonceMismatch, epoch, "expiry carries foreign nonce");
        return;
    }
    // The trade is dead; it still counts against the quota so the run ends.
    ++trades_done_;
    state_ = trades_done_ < init_.n_trades ? State::Idle : State::Aborted;
}

bool SellerAgent::quiescent() const {
    if (!mailbox_.empty() || pending_replay_) return false;
    if (state_ == State::Aborted) return true;
    return trades_done_ >= init_.n_trades &&
           (state_ == State::Settled || state_ == State::Idle);
}

BuyerAgent::BuyerAgent(Init init, Rng rng, Ledger& ledger, BlobStore& store,
                       FreshnessRegistry* registry)
    : init_(std::move(init)),
      rng_(std::move(rng)),
      ledger_(ledger),
      store_(store),
      registry_(registry) {}

void BuyerAgent::alert(Errc code, std::uint64_t epoch, const std::string& detail) {
    trace_alert(ledger_, chain_of(init_.contract_address), epoch, code,
                trade_id_.empty() ? corr_ : trade_id_, detail);
}

void BuyerAgent::step(std::uint64_t epoch) {
    std::vector<Message> inbox;
    inbox.swap(mailbox_);
    for (const Message& msg : inbox) {
        if (msg.kind == "invoice")
            handle_invoice(msg, epoch);
        else if (msg.kind == "relay")
            handle_relay(msg, epoch);
        else if (msg.kind == "refund")
            handle_refund(msg, epoch);
    }

    if (pending_fetch_ && epoch >= pending_fetch_->ready_epoch) finish_delivery(epoch);

    if (state_ == State::Idle && trades_done_ < init_.n_trades && epoch >= init_.start_epoch)
        start_trade(epoch);
}

void BuyerAgent::start_trade(std::uint64_t epoch) {
    (void)epoch;
    trade_keys_ = crypto::keygen(rng_);
    id_b_ = crypto::make_nonce(rng_);
    if (registry_) {
        registry_->add_pubkey(trade_keys_.public_key, init_.id);
        registry_->add_nonce(id_b_, init_.id);
    }
    trade_id_.clear();
    corr_ = corr_tag("b", init_.contract_address, id_b_);
    records_.push_back({.id_b = id_b_});

    nlohmann::json body{{"dd", init_.dd.to_json()},
                        {"id_b", id_b_.hex()},
                        {"ku_buyer", to_hex(trade_keys_.public_key)}};
    crypto::Ciphertext c =
        crypto::hybrid_encrypt(init_.broker_pubkey, to_bytes(body.dump()), init_.padding_buckets);
    ledger_.submit_off_ledger(chain_of(init_.contract_address),
                              {.from = init_.wallet,
                               .to_contract = init_.contract_address,
                               .kind = "buy_request",
                               .payload = c.blob,
                               .corr = corr_});
    state_ = State::Requested;
}

void BuyerAgent::handle_invoice(const Message& msg, std::uint64_t epoch) {
    if (state_ != State::Requested) {
        alert(Errc::StateError, epoch, "invoice in state");
        return;
    }
    Invoice invoice;
    try {
        Bytes plain = crypto::hybrid_decrypt(trade_keys_, {msg.payload, msg.payload.size()});
        invoice = Invoice::from_json(nlohmann::json::parse(plain.begin(), plain.end()));
    } catch (const std::exception& e) {
        alert(Errc::DecryptFailure, epoch, e.what());
        return;
    }

    // The only check the buyer can perform from public data: recompute the
    // price from the published table.
    std::uint64_t expected =
        compute_price(init_.prices.at(init_.dd.sensor_type), init_.dd.volume);
    if (invoice.price != expected) {
        alert(Errc::PriceMismatch, epoch,
              "invoice " + std::to_string(invoice.price) + " expected " +
                  std::to_string(expected));
        state_ = State::Aborted;
        return;
    }
    if (ledger_.balance(init_.contract_address) < invoice.price) {
        alert(Errc::InsufficientFunds, epoch, "balance below invoice price");
        state_ = State::Aborted;
        return;
    }

    trade_id_ = invoice.trade_id;
    records_.back().trade_id = trade_id_;
    std::uint64_t amount = init_.fault_underpay ? invoice.price - 1 : invoice.price;

    nlohmann::json note{{"trade_id", invoice.trade_id}, {"amount", amount}};
    crypto::Ciphertext c =
        crypto::hybrid_encrypt(init_.broker_pubkey, to_bytes(note.dump()), init_.padding_buckets);
    ledger_.submit_off_ledger(chain_of(init_.contract_address),
                              {.from = init_.wallet,
                               .to_contract = init_.contract_address,
                               .kind = "pay_invoice",
                               .payload = c.blob,
                               .instructed_amount = amount,
                               .corr = trade_id_});
    state_ = State::Paid;
}

void BuyerAgent::handle_relay(const Message& msg, std::uint64_t epoch) {
    if (state_ != State::Paid) {
        alert(Errc::StateError, epoch, "delivery in state");
        return;
    }
    nlohmann::json body;
    try {
        Bytes plain = crypto::hybrid_decrypt(trade_keys_, {msg.payload, msg.payload.size()});
        body = nlohmann::json::parse(plain.begin(), plain.end());
    } catch (const std::exception& e) {
        alert(Errc::DecryptFailure, epoch, e.what());
        return;
    }
    if (crypto::Nonce::from_hex(body.at("id_b").get<std::string>()) != id_b_) {
        alert(Errc::NonceMismatch, epoch, "delivery carries foreign nonce");
        state_ = State::Aborted;
        return;
    }

    pending_fetch_ = PendingFetch{
        ContentAddress::from_hex(body.at("address").get<std::string>()),
        crypto::SymmetricKey::from_hex(body.at("k_s").get<std::string>()),
        epoch + store_.retrieval_latency_epochs,
    };
    if (store_.retrieval_latency_epochs == 0) finish_delivery(epoch);
}

void BuyerAgent::finish_delivery(std::uint64_t epoch) {
    PendingFetch fetch = *pending_fetch_;
    pending_fetch_.reset();

    std::uint64_t score = 0;
    Bytes recovered;
    try {
        const Bytes& blob = store_.get(fetch.address);
        recovered = crypto::sym_decrypt(fetch.key, blob);
        nlohmann::json readings = nlohmann::json::parse(recovered.begin(), recovered.end());
        PlausibilityRange range = plausibility_range(init_.dd.sensor_type);
        bool conforms = readings.is_array() && readings.size() == init_.dd.volume;
        if (conforms)
            for (const auto& r : readings)
                if (!r.is_number() || r.get<double>() < range.lo || r.get<double>() > range.hi)
                    conforms = false;
        score = conforms ? 100 : 0;
    } catch (const MarketError& e) {
        alert(e.code(), epoch, "delivery unusable");
        score = 0;
    } catch (const std::exception&) {
        score = 0;
    }

    records_.back().recovered = recovered;
    records_.back().received = true;
    state_ = State::Received;

    if (init_.fault_silent) {
        ++trades_done_;
        return;  // seller gets settled by the broker's timeout
    }
    send_score(score, epoch);
}

void BuyerAgent::send_score(std::uint64_t score, std::uint64_t epoch) {
    (void)epoch;
    records_.back().score_given = score;
    nlohmann::json body{{"trade_id", trade_id_}, {"score", score}};
    crypto::Ciphertext c =
        crypto::hybrid_encrypt(init_.broker_pubkey, to_bytes(body.dump()), init_.padding_buckets);
    ledger_.submit_off_ledger(chain_of(init_.contract_address),
                              {.from = init_.wallet,
                               .to_contract = init_.contract_address,
                               .kind = "score",
                               .payload = c.blob,
                               .corr = trade_id_});
    ++trades_done_;
    state_ = trades_done_ < init_.n_trades ? State::Idle : State::Scored;
}

void BuyerAgent::handle_refund(const Message& msg, std::uint64_t epoch) {
    (void)msg;
    alert(Errc::WrongAmount, epoch, "payment refunded");
    state_ = State::Aborted;
}

bool BuyerAgent::quiescent() const {
    if (!mailbox_.empty() || pending_fetch_) return false;
    if (state_ == State::Aborted) return true;
    if (trades_done_ < init_.n_trades) return false;
    return state_ == State::Scored || state_ == State::Received || state_ == State::Idle;
}

}  // namespace market
