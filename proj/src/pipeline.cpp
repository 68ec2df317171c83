#include "kce/pipeline.hpp"

#include "kce/container.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace kce {

namespace {

void require_file(const std::filesystem::path& p, const std::string& key) {
    if (p.empty()) throw IoError("config key '" + key + "' is not set");
    if (!std::filesystem::exists(p)) throw IoError("config key '" + key + "': " + p.string() + " does not exist");
}

std::filesystem::path ensure_output_dir(const RunConfig& cfg) {
    const auto dir = cfg.output_dir();
    std::filesystem::create_directories(dir);
    return dir;
}

WordVectors load_normalized_vocabulary(const RunConfig& cfg) {
    require_file(cfg.embeddings, "embeddings");
    WordVectors words = load_embeddings(cfg.embeddings);
    normalize_rows(words.vectors);
    return words;
}

// Pre-images of the listed tokens, as a vocabulary of their own.
WordVectors preimage_vocabulary(const WordVectors& words, const std::vector<std::string>& tokens,
                                const PreimageNet& net) {
    WordVectors out;
    MatrixXd X(static_cast<Index>(tokens.size()), words.dim());
    for (std::size_t i = 0; i < tokens.size(); ++i) X.row(static_cast<Index>(i)) = words.at(tokens[i]).transpose();
    out.tokens = tokens;
    out.vectors = forward_rows(net, X);
    out.rebuild_index();
    return out;
}

// Successful runs of the grid, in grid order, loaded from disk.
std::vector<ErasureResult> load_runs(const RunConfig& cfg) {
    std::vector<ErasureResult> runs;
    for (const auto& kernel : cfg.kernels) {
        for (auto seed : cfg.seeds) {
            const auto path = artifact_path(cfg, kernel, seed);
            if (!std::filesystem::exists(path)) {
                warn("no erasure artifact for " + to_string(kernel) + " seed " + std::to_string(seed) + " (" +
                     path.string() + ")");
                continue;
            }
            runs.push_back(load_erasure(path));
        }
    }
    if (runs.empty()) throw IoError("no erasure artifacts found in " + cfg.output_dir().string() + "; run erase first");
    return runs;
}

std::vector<std::string> families_in_order(const std::vector<ErasureResult>& runs) {
    std::vector<std::string> out;
    for (const auto& r : runs) {
        const auto f = family_label(r.kernel);
        if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    }
    return out;
}

std::vector<std::string> unique_words(const WeatSpec& spec) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto* list : {&spec.X, &spec.Y, &spec.A, &spec.B})
        for (const auto& w : *list)
            if (seen.insert(w).second) out.push_back(w);
    return out;
}

std::string md_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    out << '|';
    for (const auto& h : header) out << ' ' << h << " |";
    out << "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& row : rows) {
        out << '|';
        for (const auto& cell : row) out << ' ' << cell << " |";
        out << '\n';
    }
    return out.str();
}

std::string tsv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "\t" : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
        out << '\n';
    }
    return out.str();
}

void write_both(const RunConfig& cfg, const std::string& stem, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
    const auto dir = ensure_output_dir(cfg);
    write_report(dir / (stem + ".tsv"), tsv_table(header, rows), cfg, false);
    write_report(dir / (stem + ".md"), md_table(header, rows), cfg, true);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string family_label(const KernelSpec& spec) {
    switch (spec.family) {
        case KernelFamily::linear: return "Linear";
        case KernelFamily::poly: return "Poly";
        case KernelFamily::rbf: return "RBF";
        case KernelFamily::laplace: return "Laplace";
        case KernelFamily::sigmoid: return "Sigmoid";
        case KernelFamily::combination: return "MK";
    }
    return "?";
}

void write_report(const std::filesystem::path& path, const std::string& body, const RunConfig& cfg, bool markdown) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    if (markdown) {
        out << "Config hash: `" << cfg.hash() << "`\n\n" << body;
    } else {
        out << "# config_hash=" << cfg.hash() << '\n' << body;
    }
    if (!out) throw IoError("write failed for " + path.string());
}

LabeledEmbeddings load_dataset(const RunConfig& cfg) {
    if (cfg.dataset == "synth") return synth_radial(cfg.synth_n, cfg.synth_d, cfg.synth_seed, cfg.synth_band);
    require_file(cfg.embeddings, "embeddings");
    require_file(cfg.labels, "labels");
    return assemble(load_embeddings(cfg.embeddings), load_label_tsv(cfg.labels));
}

ErasureResult erase_one(const LabeledEmbeddings& data, const KernelSpec& kernel, std::uint64_t seed,
                        const RunConfig& cfg) {
    const MatrixXd X_train = data.features(Split::train);
    const MatrixXd X_dev = data.features(Split::dev);
    const MatrixXd X_test = data.features(Split::test);
    const Labels y_train = data.labels(Split::train);
    const Labels y_dev = data.labels(Split::dev);
    const Labels y_test = data.labels(Split::test);
    if (X_train.rows() == 0 || X_dev.rows() == 0 || X_test.rows() == 0)
        throw InvalidArgument("erasure needs non-empty train, dev and test splits");

    ErasureResult r;
    r.kernel = kernel;
    r.seed = seed;
    r.map = fit_nystrom(X_train, kernel, std::min(cfg.landmarks, X_train.rows()), seed);
    const MatrixXd F_train = transform_rows(r.map, X_train);
    const MatrixXd F_dev = transform_rows(r.map, X_dev);
    const MatrixXd F_test = transform_rows(r.map, X_test);

    SolverConfig solver = cfg.solver;
    solver.seed = seed;
    r.game = solve_game(F_train, y_train, F_dev, y_dev, cfg.k, solver);

    ProbeOptions probe;
    probe.reg = cfg.solver.probe_reg;
    r.majority = majority_rate(y_test);
    r.probe_before = linear_probe(F_train, y_train, F_test, y_test, probe);
    r.probe_after = linear_probe(F_train * r.game.P, y_train, F_test * r.game.P, y_test, probe);

    const PreimageNet init = init_preimage_net(X_train.cols(), seed, cfg.hidden1, cfg.hidden2, cfg.dropout);
    PreimageConfig pre = cfg.preimage;
    pre.seed = seed;
    const auto trained = train_preimage(init, X_train, X_dev, r.game.P, r.map, pre);
    r.net = trained.net;
    r.preimage_step = trained.best_step;
    r.recon = relative_reconstruction_error(r.net, X_test, r.game.P, r.map);

    if (data.aux) {
        const Labels a_train = data.aux_labels(Split::train);
        const Labels a_test = data.aux_labels(Split::test);
        r.aux_before = linear_probe(X_train, a_train, X_test, a_test, probe);
        r.aux_after = linear_probe(forward_rows(r.net, X_train), a_train, forward_rows(r.net, X_test), a_test, probe);
    }
    return r;
}

std::filesystem::path artifact_path(const RunConfig& cfg, const KernelSpec& kernel, std::uint64_t seed) {
    return cfg.output_dir() / "runs" / (kernel_slug(kernel) + "_s" + std::to_string(seed) + ".kce1");
}

void save_erasure(const std::filesystem::path& path, const ErasureResult& r, const RunConfig& cfg) {
    Kce1File file;
    file.add_text("config", cfg.snapshot());
    file.add_text("config_hash", cfg.hash());
    file.add_scalar("seed", static_cast<double>(r.seed));
    store(file, "nystrom", r.map);
    store(file, "game", r.game);
    store(file, "preimage", r.net);
    file.add_scalar("metrics.majority", r.majority);
    file.add_scalar("metrics.probe_before", r.probe_before);
    file.add_scalar("metrics.probe_after", r.probe_after);
    file.add_scalar("metrics.recon_percent", r.recon.percent);
    file.add_scalar("metrics.recon_evaluated", static_cast<double>(r.recon.evaluated));
    file.add_scalar("metrics.recon_skipped", static_cast<double>(r.recon.skipped));
    file.add_scalar("metrics.preimage_step", r.preimage_step);
    if (r.aux_before) file.add_scalar("metrics.aux_before", *r.aux_before);
    if (r.aux_after) file.add_scalar("metrics.aux_after", *r.aux_after);
    std::filesystem::create_directories(path.parent_path());
    write_kce1(path, file);
}

ErasureResult load_erasure(const std::filesystem::path& path) {
    const Kce1File file = read_kce1(path);
    ErasureResult r;
    r.seed = static_cast<std::uint64_t>(file.scalar("seed"));
    r.map = load_nystrom(file, "nystrom");
    r.kernel = r.map.kernel;
    r.game = load_game(file, "game");
    r.net = load_preimage(file, "preimage");
    r.majority = file.scalar("metrics.majority");
    r.probe_before = file.scalar("metrics.probe_before");
    r.probe_after = file.scalar("metrics.probe_after");
    r.recon.percent = file.scalar("metrics.recon_percent");
    r.recon.evaluated = static_cast<Index>(file.scalar("metrics.recon_evaluated"));
    r.recon.skipped = static_cast<Index>(file.scalar("metrics.recon_skipped"));
    r.preimage_step = static_cast<int>(file.scalar("metrics.preimage_step"));
    if (file.contains("metrics.aux_before")) r.aux_before = file.scalar("metrics.aux_before");
    if (file.contains("metrics.aux_after")) r.aux_after = file.scalar("metrics.aux_after");
    return r;
}

std::vector<EraseRecord> run_erase(const RunConfig& cfg) {
    const LabeledEmbeddings data = load_dataset(cfg);
    ensure_output_dir(cfg);
    std::vector<EraseRecord> records;
    for (const auto& kernel : cfg.kernels) {
        for (auto seed : cfg.seeds) {
            EraseRecord rec;
            rec.kernel = kernel;
            rec.seed = seed;
            try {
                auto result = erase_one(data, kernel, seed, cfg);
                save_erasure(artifact_path(cfg, kernel, seed), result, cfg);
                rec.status = "ok";
                rec.result = std::move(result);
            } catch (const std::exception& e) {
                rec.status = std::string("failed: ") + e.what();
                warn(to_string(kernel) + " seed " + std::to_string(seed) + ": " + rec.status);
            }
            records.push_back(std::move(rec));
        }
    }

    std::vector<std::vector<std::string>> rows;
    for (const auto& rec : records) {
        std::vector<std::string> row{to_string(rec.kernel), std::to_string(rec.seed), rec.status};
        if (rec.result) {
            const auto& r = *rec.result;
            row.insert(row.end(), {fixed(r.majority, 4), fixed(r.probe_before, 4), fixed(r.probe_after, 4),
                                   fixed(r.recon.percent, 4), std::to_string(r.game.selected_step),
                                   std::to_string(r.preimage_step)});
        } else {
            row.insert(row.end(), {"", "", "", "", "", ""});
        }
        rows.push_back(std::move(row));
    }
    const auto dir = ensure_output_dir(cfg);
    write_report(dir / "erase.tsv",
                 tsv_table({"kernel", "seed", "status", "majority", "probe_before", "probe_after", "recon_percent",
                            "game_step", "preimage_step"},
                           rows),
                 cfg, false);

    // Summary: mean +- std over seeds per grid point.
    std::vector<std::vector<std::string>> summary;
    for (const auto& kernel : cfg.kernels) {
        std::vector<double> before, after, recon, maj;
        int failed = 0;
        for (const auto& rec : records) {
            if (!(rec.kernel == kernel)) continue;
            if (!rec.result) {
                ++failed;
                continue;
            }
            before.push_back(rec.result->probe_before);
            after.push_back(rec.result->probe_after);
            recon.push_back(rec.result->recon.percent);
            maj.push_back(rec.result->majority);
        }
        if (before.empty()) {
            summary.push_back({to_string(kernel), "0", std::to_string(failed), "", "", "", ""});
            continue;
        }
        summary.push_back({to_string(kernel), std::to_string(before.size()), std::to_string(failed),
                           format_cell(summarize(maj)), format_cell(summarize(before)), format_cell(summarize(after)),
                           format_cell(summarize(recon))});
    }
    write_report(dir / "erase.md",
                 md_table({"kernel", "runs", "failed", "majority", "probe before", "probe after", "recon. error %"},
                          summary),
                 cfg, true);
    return records;
}

std::vector<SameKernelRow> run_eval_same(const RunConfig& cfg) {
    const LabeledEmbeddings data = load_dataset(cfg);
    const auto runs = load_runs(cfg);
    const MatrixXd X_train = data.features(Split::train);
    const MatrixXd X_test = data.features(Split::test);
    const Labels y_train = data.labels(Split::train);
    const Labels y_test = data.labels(Split::test);

    std::map<std::string, std::vector<double>> before, after;
    std::map<std::string, double> before_cache;
    for (const auto& run : runs) {
        const auto family = family_label(run.kernel);
        const auto key = to_string(run.kernel);
        if (!before_cache.count(key))
            before_cache[key] = accuracy(fit_kernel(X_train, y_train, run.kernel, cfg.adversary), X_test, y_test);
        before[family].push_back(before_cache[key]);
        const MatrixXd Z_train = forward_rows(run.net, X_train);
        const MatrixXd Z_test = forward_rows(run.net, X_test);
        after[family].push_back(accuracy(fit_kernel(Z_train, y_train, run.kernel, cfg.adversary), Z_test, y_test));
    }
    std::vector<SameKernelRow> out;
    std::vector<std::vector<std::string>> rows;
    for (const auto& family : families_in_order(runs)) {
        out.push_back({family, summarize(before[family]), summarize(after[family])});
        rows.push_back({family, format_cell(out.back().before), format_cell(out.back().after)});
    }
    write_both(cfg, "eval_same", {"kernel", "before", "after"}, rows);
    return out;
}

TransferTable run_eval_transfer(const RunConfig& cfg) {
    const LabeledEmbeddings data = load_dataset(cfg);
    const auto runs = load_runs(cfg);
    const MatrixXd X_train = data.features(Split::train);
    const MatrixXd X_test = data.features(Split::test);
    std::vector<NeutralizedSplit> sets;
    for (const auto& run : runs) {
        sets.push_back({family_label(run.kernel), static_cast<int>(run.seed), forward_rows(run.net, X_train),
                        forward_rows(run.net, X_test)});
    }
    TransferOptions options;
    options.kernel = cfg.adversary;
    options.mlp = cfg.mlp;
    options.mlp_restarts = cfg.mlp_restarts;
    TransferTable table = transfer_matrix(sets, default_transfer_adversaries(), data.labels(Split::train),
                                          data.labels(Split::test), options);
    const auto dir = ensure_output_dir(cfg);
    write_report(dir / "eval_transfer.tsv", table.to_tsv(), cfg, false);
    write_report(dir / "eval_transfer.md", table.to_markdown(), cfg, true);
    return table;
}

std::vector<WeatRow> run_weat(const RunConfig& cfg) {
    require_file(cfg.weat_suite, "weat_suite");
    const auto suite = load_weat_suite(cfg.weat_suite);
    const WordVectors words = load_normalized_vocabulary(cfg);
    const auto runs = load_runs(cfg);
    const std::uint64_t seed = cfg.seeds.front();

    std::vector<WeatRow> out;
    for (auto spec : suite) {
        spec.permutations = cfg.weat_permutations;
        const auto original = weat(words, spec, seed);
        out.push_back({spec.name, "Original", summarize({original.d}), summarize({original.p})});
        const auto tokens = unique_words(spec);
        std::map<std::string, std::vector<double>> d, p;
        for (const auto& run : runs) {
            const auto result = weat(preimage_vocabulary(words, tokens, run.net), spec, seed);
            d[family_label(run.kernel)].push_back(result.d);
            p[family_label(run.kernel)].push_back(result.p);
        }
        for (const auto& family : families_in_order(runs))
            out.push_back({spec.name, family, summarize(d[family]), summarize(p[family])});
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : out) rows.push_back({r.test, r.kernel, format_cell(r.d), format_cell(r.p)});
    write_both(cfg, "weat", {"test", "kernel", "d", "p"}, rows);
    return out;
}

std::vector<SimlexRow> run_simlex(const RunConfig& cfg) {
    require_file(cfg.simlex, "simlex");
    const auto pairs = load_word_pairs(cfg.simlex);
    const WordVectors words = load_normalized_vocabulary(cfg);
    const auto runs = load_runs(cfg);

    std::vector<std::string> tokens;
    std::set<std::string> seen;
    for (const auto& pr : pairs)
        for (const auto* w : {&pr.first, &pr.second})
            if (words.find(*w) && seen.insert(*w).second) tokens.push_back(*w);

    const auto base = similarity_correlation(words, words, pairs);
    std::vector<SimlexRow> out{{"Original", summarize({base.rho_before}), base.used}};
    std::map<std::string, std::vector<double>> rho;
    for (const auto& run : runs) {
        const auto after = similarity_correlation(words, preimage_vocabulary(words, tokens, run.net), pairs);
        rho[family_label(run.kernel)].push_back(after.rho_after);
    }
    for (const auto& family : families_in_order(runs)) out.push_back({family, summarize(rho[family]), base.used});
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : out) rows.push_back({r.kernel, format_cell(r.rho), std::to_string(r.pairs)});
    write_both(cfg, "simlex", {"kernel", "rank correlation", "pairs"}, rows);
    return out;
}

void run_neighbors(const RunConfig& cfg) {
    if (cfg.neighbor_words.empty()) throw InvalidArgument("config key 'neighbor_words' lists no words");
    const WordVectors words = load_normalized_vocabulary(cfg);
    const auto runs = load_runs(cfg);
    std::vector<std::vector<std::string>> rows;
    std::set<std::string> done;
    for (const auto& run : runs) {
        const auto family = family_label(run.kernel);
        if (!done.insert(family).second) continue;
        WordVectors after;
        after.tokens = words.tokens;
        after.vectors = forward_rows(run.net, words.vectors);
        after.rebuild_index();
        for (const auto& w : cfg.neighbor_words) {
            const auto b = nearest_neighbors(words, w, cfg.neighbors_k);
            const auto a = nearest_neighbors(after, w, cfg.neighbors_k);
            for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
                rows.push_back({family, w, std::to_string(i + 1), i < b.size() ? b[i].token : "",
                                i < a.size() ? a[i].token : ""});
            }
        }
    }
    write_both(cfg, "neighbors", {"kernel", "word", "rank", "before", "after"}, rows);
}

OracleCheckReport run_oracle_check(const RunConfig& cfg) {
    const auto report = run_poly2_oracle_check(cfg.oracle_instances, cfg.oracle_anchors, cfg.seeds.front());
    const bool pass = report.max_deviation() < 1e-8;
    std::vector<std::vector<std::string>> rows{{std::to_string(report.instances),
                                                format_double(report.max_prediction_deviation),
                                                format_double(report.max_objective_deviation), pass ? "PASS" : "FAIL"}};
    write_both(cfg, "oracle", {"instances", "max_prediction_deviation", "max_objective_deviation", "result"}, rows);
    return report;
}

std::filesystem::path run_ingest(const RunConfig& cfg) {
    require_file(cfg.embeddings, "embeddings");
    const WordVectors words = load_embeddings(cfg.embeddings);
    const LabeledEmbeddings labeled = induce_labels(words, cfg.anchor_a, cfg.anchor_b, cfg.per_side);
    const Index n = labeled.size();
    const auto train = static_cast<Index>(std::llround(0.49 * static_cast<double>(n)));
    const auto dev = static_cast<Index>(std::llround(0.21 * static_cast<double>(n)));
    const LabeledEmbeddings out = split(labeled, {train, dev, n - train - dev}, cfg.split_seed);
    const auto path = ensure_output_dir(cfg) / "labels.tsv";
    save_label_tsv(path, out);
    return path;
}

}  // namespace kce
