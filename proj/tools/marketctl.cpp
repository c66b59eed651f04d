// Command-line front end: run a scenario, replay linkage attacks against it,
// or summarize a stored trace.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "market/metrics.hpp"
#include "market/privacy.hpp"

namespace {

int log_level() {
    const char* env = std::getenv("MARKET_LOG_LEVEL");
    if (!env) return 1;
    std::string v = env;
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

int cmd_run(const std::string& config_path, long long seed_override,
            const std::string& out_dir) {
    market::ScenarioConfig config = config_path.empty()
                                        ? market::ScenarioConfig{}
                                        : market::ScenarioConfig::load_file(config_path);
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    config.validate();

    market::SimulationResult result = market::run_simulation(config);
    market::CostReport report = market::build_cost_report(result);

    write_file(out_dir + "/trace.jsonl", result.trace.to_jsonl());
    write_file(out_dir + "/cost_report.json", report.to_json().dump(2) + "\n");
    write_file(out_dir + "/reputation.json", result.reputation.dump(2) + "\n");

    if (log_level() >= 1) {
        std::cerr << "epochs=" << result.epochs_run << " trades=" << result.trades.size()
                  << " settled=" << result.settled_trades << " l1_txs=" << result.l1_tx_count
                  << " gas=" << result.gas_sink << "\n";
        for (const std::string& v : result.violations) std::cerr << "violation: " << v << "\n";
    }
    if (!result.ok()) {
        std::cerr << "invariant violations detected\n";
        return 1;
    }
    return 0;
}

int cmd_attack(const std::string& config_path, const std::string& attack, std::size_t runs,
               const std::string& out_path) {
    market::ScenarioConfig config = config_path.empty()
                                        ? market::ScenarioConfig{}
                                        : market::ScenarioConfig::load_file(config_path);
    config.validate();
    market::AttackReport report = market::run_attack_montecarlo(config, attack, runs);
    std::string text = report.to_json().dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
    if (report.degenerate_interval && log_level() >= 1)
        std::cerr << "warning: single run, confidence interval is degenerate\n";
    return 0;
}

int cmd_report(const std::string& trace_path) {
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + trace_path);
    std::stringstream buf;
    buf << in.rdbuf();
    market::TradeTrace trace = market::TradeTrace::from_jsonl(buf.str());

    std::uint64_t l1 = 0, off = 0, errors = 0, gas = 0, last_epoch = 0;
    for (const market::TraceEvent& ev : trace.events) {
        if (ev.l1_tx) ++l1;
        if (ev.type == market::EventType::OffLedger) ++off;
        if (ev.type == market::EventType::Error || ev.type == market::EventType::Alert) ++errors;
        gas += ev.gas;
        last_epoch = std::max(last_epoch, ev.epoch);
    }
    std::cout << "events:      " << trace.events.size() << "\n"
              << "epochs:      " << last_epoch + (trace.events.empty() ? 0 : 1) << "\n"
              << "l1 txs:      " << l1 << "\n"
              << "off-ledger:  " << off << "\n"
              << "errors:      " << errors << "\n"
              << "gas burned:  " << gas << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"privacy-preserving data marketplace simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", attack = "timing", out_path, trace_path;
    long long seed_override = -1;
    std::size_t runs = 20;

    CLI::App* run = app.add_subcommand("run", "run a scenario and write artifacts");
    run->add_option("--config", config_path, "scenario config JSON");
    run->add_option("--seed", seed_override, "override the config seed");
    run->add_option("--out", out_dir, "output directory");

    CLI::App* atk = app.add_subcommand("attack", "Monte Carlo linkage attack");
    atk->add_option("--config", config_path, "scenario config JSON");
    atk->add_option("--attack", attack, "timing or size")->required();
    atk->add_option("--runs", runs, "number of seeded runs");
    atk->add_option("--out", out_path, "report path (stdout when omitted)");

    CLI::App* rep = app.add_subcommand("report", "summarize a stored trace");
    rep->add_option("--trace", trace_path, "trace.jsonl path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed_override, out_dir);
        if (atk->parsed()) return cmd_attack(config_path, attack, runs, out_path);
        return cmd_report(trace_path);
    } catch (const market::MarketError& e) {
        std::cerr << "error [" << market::errc_name(e.code()) << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
