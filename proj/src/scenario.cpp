#include "market/scenario.hpp"

#include <fstream>

namespace market {

const std::string kBrokerChain = "broker";
const std::string kSellersChain = "sellers";
const std::string kBuyersChain = "buyers";
const std::string kBrokerAddress = "broker/market";

std::string ScenarioConfig::region_for(std::uint64_t pair) const {
    if (!regions.empty()) return regions[pair % regions.size()];
    // Default names have pairwise-distinct lengths so request sizes are
    // separable whenever padding is disabled.
    return "cell-" + std::to_string(pair) + "-" + std::string(pair, 'z');
}

SensorType ScenarioConfig::type_for(std::uint64_t pair) const {
    return sensor_types[pair % sensor_types.size()];
}

nlohmann::json ScenarioConfig::to_json() const {
    nlohmann::json types = nlohmann::json::array();
    for (SensorType t : sensor_types) types.push_back(market::to_string(t));
    nlohmann::json fault_list = nlohmann::json::array();
    for (const FaultSpec& f : faults)
        fault_list.push_back(nlohmann::json{{"agent", f.agent}, {"fault", f.fault}});
    return nlohmann::json{
        {"seed", seed},
        {"n_sellers", n_sellers},
        {"n_buyers", n_buyers},
        {"price_table", prices.to_json()},
        {"padding", padding},
        {"padding_buckets", padding_buckets},
        {"batching", batching},
        {"gas", {{"on_ledger", gas.on_ledger}, {"off_ledger", gas.off_ledger}}},
        {"score_timeout", score_timeout},
        {"abandon_timeout", abandon_timeout},
        {"seller_choice", seller_choice},
        {"cert_validity", cert_validity},
        {"volume", volume},
        {"sensor_types", types},
        {"regions", regions},
        {"faults", fault_list},
        {"max_epochs", max_epochs},
        {"trades_per_pair", trades_per_pair},
        {"initial_buyer_funds", initial_buyer_funds},
        {"contract_gas_float", contract_gas_float},
        {"broker_float", broker_float},
        {"blob_latency", blob_latency},
    };
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.n_sellers = j.value("n_sellers", cfg.n_sellers);
        cfg.n_buyers = j.value("n_buyers", cfg.n_buyers);
        if (j.contains("price_table")) cfg.prices = PriceTable::from_json(j.at("price_table"));
        cfg.padding = j.value("padding", cfg.padding);
        if (j.contains("padding_buckets"))
            cfg.padding_buckets = j.at("padding_buckets").get<std::vector<std::size_t>>();
        cfg.batching = j.value("batching", cfg.batching);
        if (j.contains("gas")) {
            cfg.gas.on_ledger = j.at("gas").value("on_ledger", cfg.gas.on_ledger);
            cfg.gas.off_ledger = j.at("gas").value("off_ledger", cfg.gas.off_ledger);
        }
        cfg.score_timeout = j.value("score_timeout", cfg.score_timeout);
        cfg.abandon_timeout = j.value("abandon_timeout", cfg.abandon_timeout);
        cfg.seller_choice = j.value("seller_choice", cfg.seller_choice);
        cfg.cert_validity = j.value("cert_validity", cfg.cert_validity);
        cfg.volume = j.value("volume", cfg.volume);
        if (j.contains("sensor_types")) {
            cfg.sensor_types.clear();
            for (const auto& t : j.at("sensor_types"))
                cfg.sensor_types.push_back(sensor_type_from_string(t.get<std::string>()));
        }
        if (j.contains("regions"))
            cfg.regions = j.at("regions").get<std::vector<std::string>>();
        if (j.contains("faults"))
            for (const auto& f : j.at("faults"))
                cfg.faults.push_back({f.at("agent").get<std::string>(),
                                      f.at("fault").get<std::string>()});
        cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
        cfg.trades_per_pair = j.value("trades_per_pair", cfg.trades_per_pair);
        cfg.initial_buyer_funds = j.value("initial_buyer_funds", cfg.initial_buyer_funds);
        cfg.contract_gas_float = j.value("contract_gas_float", cfg.contract_gas_float);
        cfg.broker_float = j.value("broker_float", cfg.broker_float);
        cfg.blob_latency = j.value("blob_latency", cfg.blob_latency);
    } catch (const MarketError&) {
        throw;
    } catch (const std::exception& e) {
        throw MarketError(Errc::ConfigParse, e.what());
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MarketError(Errc::ConfigParse, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw MarketError(Errc::ConfigParse, e.what());
    }
    return from_json(j);
}

void ScenarioConfig::validate() const {
    if (max_epochs == 0) throw MarketError(Errc::ConfigParse, "max_epochs must be positive");
    if (volume == 0) throw MarketError(Errc::ConfigParse, "volume must be positive");
    if (sensor_types.empty())
        throw MarketError(Errc::ConfigParse, "at least one sensor type required");
    for (const auto& [type, price] : prices.basic_price)
        if (price == 0) throw MarketError(Errc::ConfigParse, "prices must be positive");
    for (SensorType t : sensor_types)
        if (!prices.basic_price.count(t))
            throw MarketError(Errc::ConfigParse,
                              "no basic price for " + market::to_string(t));
    if (padding && padding_buckets.empty())
        throw MarketError(Errc::ConfigParse, "padding enabled but no buckets given");
    for (const FaultSpec& f : faults)
        if (f.fault != "silent_buyer" && f.fault != "wrong_sym_key" &&
            f.fault != "replay_sell_request" && f.fault != "inflated_invoice" &&
            f.fault != "stale_notice" && f.fault != "underpay")
            throw MarketError(Errc::ConfigParse, "unknown fault " + f.fault);
}

namespace {

bool has_fault(const ScenarioConfig& cfg, const std::string& agent, const std::string& fault) {
    for (const FaultSpec& f : cfg.faults)
        if (f.agent == agent && f.fault == fault) return true;
    return false;
}

}  // namespace

SimulationResult run_simulation(const ScenarioConfig& config) {
    crypto::init();
    SimulationResult result;
    result.config = config;

    TradeTrace trace;
    Ledger ledger(trace, config.gas);
    ledger.add_chain(kSellersChain, false);
    ledger.add_chain(kBuyersChain, false);
    ledger.add_chain(kBrokerChain, true);

    Rng root(config.seed);
    Rng rng_ca = root.fork("ca");
    Rng rng_broker = root.fork("broker");
    Rng rng_sched = root.fork("scheduler");
    Rng rng_keys = root.fork("broker-keys");

    CertificateAuthority ca(rng_ca);
    BlobStore store;
    store.retrieval_latency_epochs = config.blob_latency;
    FreshnessRegistry registry;

    crypto::KeyPair broker_keys = crypto::keygen(rng_keys);
    BrokerContract::Config broker_cfg;
    broker_cfg.prices = config.prices;
    broker_cfg.trusted_issuers = ca.issuer_public_keys();
    broker_cfg.padding_buckets = config.effective_buckets();
    broker_cfg.batching = config.batching;
    broker_cfg.score_timeout = config.score_timeout;
    broker_cfg.abandon_timeout = config.abandon_timeout;
    broker_cfg.seller_choice = config.seller_choice;
    for (std::uint64_t i = 0; i < config.n_buyers; ++i)
        if (has_fault(config, "buyer-" + std::to_string(i), "inflated_invoice"))
            broker_cfg.inflate_invoice_for.insert(kBuyersChain + "/b" + std::to_string(i));
    for (std::uint64_t i = 0; i < config.n_sellers; ++i)
        if (has_fault(config, "seller-" + std::to_string(i), "stale_notice"))
            broker_cfg.stale_notice_for.insert(kSellersChain + "/s" + std::to_string(i));

    BrokerContract broker(ledger, kBrokerChain, kBrokerAddress, broker_keys, broker_cfg,
                          rng_broker);
    ledger.register_contract(kBrokerChain, kBrokerAddress, &broker);
    ledger.mint(kBrokerAddress, config.broker_float);

    std::vector<std::unique_ptr<UserContract>> contracts;
    std::vector<std::unique_ptr<SellerAgent>> sellers;
    std::vector<std::unique_ptr<BuyerAgent>> buyers;

    for (std::uint64_t i = 0; i < config.n_sellers; ++i) {
        std::string sid = "seller-" + std::to_string(i);
        std::string address = kSellersChain + "/s" + std::to_string(i);
        auto contract = std::make_unique<UserContract>(ledger, kSellersChain, address,
                                                       kBrokerChain, kBrokerAddress);
        ledger.register_contract(kSellersChain, address, contract.get());
        ledger.mint(address, config.contract_gas_float);

        Rng agent_rng = root.fork("seller-" + std::to_string(i));
        DataDescription dd{config.type_for(i), config.region_for(i), config.volume, 0, 100};

        EnrollmentRequest enroll;
        enroll.claimed_location = dd.region;
        enroll.sensor_type = dd.sensor_type;
        PlausibilityRange range = plausibility_range(dd.sensor_type);
        for (int k = 0; k < 4; ++k)
            enroll.sample_data.push_back(agent_rng.uniform_real(range.lo, range.hi));
        enroll.nonce = crypto::make_nonce(agent_rng);
        registry.add_nonce(enroll.nonce, sid);
        Certificate cert = ca.issue_certificate(enroll, 0, config.cert_validity);

        SellerAgent::Init init;
        init.id = sid;
        init.contract_address = address;
        init.wallet = "wallet:" + sid;
        init.cert = std::move(cert);
        init.dd = dd;
        init.broker_pubkey = broker_keys.public_key;
        init.padding_buckets = config.effective_buckets();
        init.n_trades = config.trades_per_pair;
        init.fault_wrong_sym_key = has_fault(config, sid, "wrong_sym_key");
        init.fault_replay_request = has_fault(config, sid, "replay_sell_request");

        auto seller = std::make_unique<SellerAgent>(std::move(init), std::move(agent_rng),
                                                    ledger, store, &registry);
        contract->set_owner(
            [agent = seller.get()](const Message& m) { agent->deliver_from_contract(m); });
        contracts.push_back(std::move(contract));
        sellers.push_back(std::move(seller));
    }

    for (std::uint64_t i = 0; i < config.n_buyers; ++i) {
        std::string bid = "buyer-" + std::to_string(i);
        std::string address = kBuyersChain + "/b" + std::to_string(i);
        auto contract = std::make_unique<UserContract>(ledger, kBuyersChain, address,
                                                       kBrokerChain, kBrokerAddress);
        ledger.register_contract(kBuyersChain, address, contract.get());
        ledger.mint(address, config.contract_gas_float +
                                 config.initial_buyer_funds * config.trades_per_pair);

        Rng agent_rng = root.fork("buyer-" + std::to_string(i));
        DataDescription dd{config.type_for(i), config.region_for(i), config.volume, 0, 100};

        BuyerAgent::Init init;
        init.id = bid;
        init.contract_address = address;
        init.wallet = "wallet:" + bid;
        init.dd = dd;
        init.broker_pubkey = broker_keys.public_key;
        init.padding_buckets = config.effective_buckets();
        init.prices = config.prices;
        init.n_trades = config.trades_per_pair;
        init.fault_silent = has_fault(config, bid, "silent_buyer");
        init.fault_underpay = has_fault(config, bid, "underpay");

        auto buyer = std::make_unique<BuyerAgent>(std::move(init), std::move(agent_rng), ledger,
                                                  store, &registry);
        contract->set_owner(
            [agent = buyer.get()](const Message& m) { agent->deliver_from_contract(m); });
        contracts.push_back(std::move(contract));
        buyers.push_back(std::move(buyer));
    }

    result.initial_supply = ledger.minted();

    // --- epoch loop ---
    std::uint64_t epoch = 0;
    for (; epoch < config.max_epochs; ++epoch) {
        ledger.deliver(epoch);
        broker.end_epoch(epoch);

        // Agents act in a freshly shuffled order each epoch so submission
        // order carries no pairing information.
        std::vector<std::size_t> order(sellers.size() + buyers.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        rng_sched.shuffle(order);
        for (std::size_t k : order) {
            if (k < sellers.size())
                sellers[k]->step(epoch);
            else
                buyers[k - sellers.size()]->step(epoch);
        }

        for (const std::string& chain : {kBrokerChain, kBuyersChain, kSellersChain}) {
            ledger.produce_block(chain, epoch);
            ledger.anchor_chain(chain, epoch);
        }

        if (ledger.total_balances() + ledger.gas_sink() != ledger.minted())
            result.violations.push_back("token conservation broken at epoch " +
                                        std::to_string(epoch));

        bool agents_done = true;
        for (const auto& s : sellers) agents_done = agents_done && s->quiescent();
        for (const auto& b : buyers) agents_done = agents_done && b->quiescent();
        if (agents_done && broker.idle() && !ledger.pending_deliveries()) {
            ++epoch;
            break;
        }
    }
    result.epochs_run = epoch;

    // --- collect artifacts and ground truth ---
    for (const std::string& chain : {kSellersChain, kBuyersChain, kBrokerChain})
        result.blocks[chain] = ledger.blocks(chain);
    result.anchors = ledger.anchors();
    result.blobs = store.all_blobs();
    result.reputation = broker.reputation_json();
    result.l1_tx_count = ledger.l1_tx_count();
    result.gas_sink = ledger.gas_sink();
    result.final_balances = ledger.total_balances();
    result.account_balances = ledger.accounts();

    // Resolve request correlation tags in the trace to trade ids.
    std::map<std::string, std::string> corr_to_trade;
    for (const auto& [trade_id, corrs] : broker.correlation_map()) {
        corr_to_trade[corrs.first] = trade_id;
        corr_to_trade[corrs.second] = trade_id;
    }
    for (TraceEvent& ev : trace.events) {
        auto it = corr_to_trade.find(ev.trade_id);
        if (it != corr_to_trade.end()) ev.trade_id = it->second;
    }
    result.trace = std::move(trace);

    for (const auto& [trade_id, trade] : broker.trades()) {
        TradeTruth truth;
        truth.trade_id = trade_id;
        truth.seller_contract = trade.sell.origin_contract;
        truth.buyer_contract = trade.buy.origin_contract;
        truth.price = trade.price;
        truth.final_state = trade.state;
        truth.dd_json = trade.buy.dd.to_json().dump();
        if (trade.state == TradeState::Settled) ++result.settled_trades;

        for (const auto& seller : sellers) {
            if (seller->contract_address() != trade.sell.origin_contract) continue;
            truth.seller_id = seller->id();
            for (const SellerTradeRecord& rec : seller->records())
                if (rec.id_s == trade.sell.seller_nonce) {
                    truth.raw_data = rec.raw_data;
                    truth.sym_key = rec.sym_key;
                }
        }
        for (const auto& buyer : buyers) {
            if (buyer->contract_address() != trade.buy.origin_contract) continue;
            truth.buyer_id = buyer->id();
            for (const BuyerTradeRecord& rec : buyer->records())
                if (rec.id_b == trade.buy.buyer_nonce) {
                    truth.recovered = rec.recovered;
                    truth.buyer_received = rec.received;
                    truth.score_given = rec.score_given;
                }
        }
        result.trades.push_back(std::move(truth));
    }

    for (const std::string& v : registry.violations) result.violations.push_back(v);
    return result;
}

}  // namespace market
