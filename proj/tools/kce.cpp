// kce: kernelized concept erasure command line.
#include "kce/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

kce::RunConfig resolve(const std::string& config_path, const std::vector<std::string>& overrides) {
    kce::RunConfig cfg = config_path.empty() ? kce::RunConfig{} : kce::load_config(config_path);
    for (const auto& o : overrides) kce::apply_override(cfg, o);
    return cfg;
}

int report_erase(const std::vector<kce::EraseRecord>& records) {
    int failed = 0;
    for (const auto& r : records) {
        std::cout << kce::to_string(r.kernel) << " seed " << r.seed << ": " << r.status;
        if (r.result) {
            std::cout << " probe " << r.result->probe_before << " -> " << r.result->probe_after << " (majority "
                      << r.result->majority << "), recon " << r.result->recon.percent << "%";
        } else {
            ++failed;
        }
        std::cout << '\n';
    }
    return failed == static_cast<int>(records.size()) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernelized concept erasure"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "key=value override, repeatable")->take_all();

    auto* ingest = app.add_subcommand("ingest", "induce labels from anchor words and split");
    auto* erase = app.add_subcommand("erase", "fit the erasure for every kernel and seed");
    auto* same = app.add_subcommand("eval-same", "same-kernel adversary on pre-images");
    auto* transfer = app.add_subcommand("eval-transfer", "neutralizer x adversary accuracy table");
    auto* weat = app.add_subcommand("weat", "association tests before and after erasure");
    auto* simlex = app.add_subcommand("simlex", "word similarity rank correlation");
    auto* neighbors = app.add_subcommand("neighbors", "nearest neighbours before and after erasure");
    auto* oracle = app.add_subcommand("oracle-check", "compare the game solver with the closed form");
    auto* keys = app.add_subcommand("keys", "list config keys");
    for (auto* sub : {ingest, erase, same, transfer, weat, simlex, neighbors, oracle, keys}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (keys->parsed()) {
            for (const auto& k : kce::config_keys()) std::cout << k << '\n';
            return 0;
        }
        const kce::RunConfig cfg = resolve(config_path, overrides);
        std::cout << "config hash " << cfg.hash() << ", output " << cfg.output_dir().string() << '\n';
        if (ingest->parsed()) {
            std::cout << "wrote " << kce::run_ingest(cfg).string() << '\n';
        } else if (erase->parsed()) {
            return report_erase(kce::run_erase(cfg));
        } else if (same->parsed()) {
            for (const auto& r : kce::run_eval_same(cfg))
                std::cout << r.family << ": " << kce::format_cell(r.before) << " -> " << kce::format_cell(r.after)
                          << '\n';
        } else if (transfer->parsed()) {
            std::cout << kce::run_eval_transfer(cfg).to_markdown();
        } else if (weat->parsed()) {
            for (const auto& r : kce::run_weat(cfg))
                std::cout << r.test << ' ' << r.kernel << ": d " << kce::format_cell(r.d) << ", p "
                          << kce::format_cell(r.p) << '\n';
        } else if (simlex->parsed()) {
            for (const auto& r : kce::run_simlex(cfg))
                std::cout << r.kernel << ": " << kce::format_cell(r.rho) << " over " << r.pairs << " pairs\n";
        } else if (neighbors->parsed()) {
            kce::run_neighbors(cfg);
            std::cout << "wrote neighbors.tsv\n";
        } else if (oracle->parsed()) {
            const auto report = kce::run_oracle_check(cfg);
            std::cout << report.instances << " instances, max deviation " << report.max_deviation() << '\n';
            return report.max_deviation() < 1e-8 ? 0 : 1;
        }
    } catch (const kce::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
