#include "kce/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace kce {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw InvalidArgument("config key '" + key + "': cannot parse '" + value + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    const double v = parse_number<double>(key, value);
    if (!std::isfinite(v)) throw InvalidArgument("config key '" + key + "' must be finite");
    return v;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ',';
        if constexpr (std::is_same_v<T, std::string>) {
            out += items[i];
        } else {
            out += std::to_string(items[i]);
        }
    }
    return out;
}

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field integer(T RunConfig::*member, T min_value) {
    return {[=](RunConfig& c, const std::string& k, const std::string& v) {
                const T parsed = parse_number<T>(k, v);
                if (parsed < min_value) throw InvalidArgument("config key '" + k + "' is below " + std::to_string(min_value));
                c.*member = parsed;
            },
            [=](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field real(double RunConfig::*member) {
    return {[=](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_real(k, v); },
            [=](const RunConfig& c) { return format_double(c.*member); }};
}

Field path(std::filesystem::path RunConfig::*member) {
    return {[=](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; },
            [=](const RunConfig& c) { return (c.*member).string(); }};
}

Field text(std::string RunConfig::*member) {
    return {[=](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; },
            [=](const RunConfig& c) { return c.*member; }};
}

// Nested members (solver, pre-image, adversary) are addressed through accessor lambdas.
template <typename F>
Field nested_real(F ref, bool positive) {
    return {[=](RunConfig& c, const std::string& k, const std::string& v) {
                const double parsed = parse_real(k, v);
                if (positive && !(parsed > 0.0)) throw InvalidArgument("config key '" + k + "' must be positive");
                if (!positive && parsed < 0.0) throw InvalidArgument("config key '" + k + "' must be non-negative");
                ref(c) = parsed;
            },
            [=](const RunConfig& c) { return format_double(ref(c)); }};
}

template <typename F>
Field nested_int(F ref, long long min_value) {
    return {[=](RunConfig& c, const std::string& k, const std::string& v) {
                const auto parsed = parse_number<long long>(k, v);
                if (parsed < min_value)
                    throw InvalidArgument("config key '" + k + "' is below " + std::to_string(min_value));
                ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(parsed);
            },
            [=](const RunConfig& c) { return std::to_string(ref(c)); }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["dataset"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                            if (v != "synth" && v != "embeddings")
                                throw InvalidArgument("config key '" + k + "' must be synth or embeddings");
                            c.dataset = v;
                        },
                        [](const RunConfig& c) { return c.dataset; }};
        t["embeddings"] = path(&RunConfig::embeddings);
        t["labels"] = path(&RunConfig::labels);
        t["synth_n"] = integer(&RunConfig::synth_n, Index{2});
        t["synth_d"] = integer(&RunConfig::synth_d, Index{3});
        t["synth_band"] = real(&RunConfig::synth_band);
        t["synth_seed"] = integer(&RunConfig::synth_seed, std::uint64_t{0});
        t["anchor_a"] = text(&RunConfig::anchor_a);
        t["anchor_b"] = text(&RunConfig::anchor_b);
        t["per_side"] = integer(&RunConfig::per_side, Index{1});
        t["split_seed"] = integer(&RunConfig::split_seed, std::uint64_t{0});
        t["weat_suite"] = path(&RunConfig::weat_suite);
        t["simlex"] = path(&RunConfig::simlex);
        t["weat_permutations"] = integer(&RunConfig::weat_permutations, 1);
        t["neighbor_words"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.neighbor_words = split_list(v); },
                               [](const RunConfig& c) { return join(c.neighbor_words); }};
        t["neighbors_k"] = integer(&RunConfig::neighbors_k, Index{0});
        t["out"] = path(&RunConfig::out);
        t["kernels"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                            auto specs = expand_kernel_grid(v);
                            if (specs.empty()) throw InvalidArgument("config key '" + k + "' lists no kernels");
                            c.kernels = std::move(specs);
                        },
                        [](const RunConfig& c) {
                            std::string out;
                            for (std::size_t i = 0; i < c.kernels.size(); ++i) {
                                if (i > 0) out += "; ";
                                out += to_string(c.kernels[i]);
                            }
                            return out;
                        }};
        t["L"] = integer(&RunConfig::landmarks, Index{1});
        t["k"] = integer(&RunConfig::k, 1);
        t["seeds"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                          std::vector<std::uint64_t> seeds;
                          for (const auto& item : split_list(v)) seeds.push_back(parse_number<std::uint64_t>(k, item));
                          if (seeds.empty()) throw InvalidArgument("config key '" + k + "' lists no seeds");
                          c.seeds = std::move(seeds);
                      },
                      [](const RunConfig& c) { return join(c.seeds); }};

        t["lr_theta"] = nested_real([](auto& c) -> auto& { return c.solver.lr_theta; }, true);
        t["lr_b"] = nested_real([](auto& c) -> auto& { return c.solver.lr_b; }, true);
        t["batch_size"] = nested_int([](auto& c) -> auto& { return c.solver.batch_size; }, 1);
        t["total_batches"] = nested_int([](auto& c) -> auto& { return c.solver.total_batches; }, 1);
        t["eval_every"] = nested_int([](auto& c) -> auto& { return c.solver.eval_every; }, 1);
        t["probe_reg"] = nested_real([](auto& c) -> auto& { return c.solver.probe_reg; }, false);

        t["lr_pre"] = nested_real([](auto& c) -> auto& { return c.preimage.lr; }, true);
        t["momentum_pre"] = nested_real([](auto& c) -> auto& { return c.preimage.momentum; }, false);
        t["batch_size_pre"] = nested_int([](auto& c) -> auto& { return c.preimage.batch_size; }, 1);
        t["total_batches_pre"] = nested_int([](auto& c) -> auto& { return c.preimage.total_batches; }, 0);
        t["eval_every_pre"] = nested_int([](auto& c) -> auto& { return c.preimage.eval_every; }, 1);
        t["hidden1"] = integer(&RunConfig::hidden1, Index{1});
        t["hidden2"] = integer(&RunConfig::hidden2, Index{1});
        t["dropout"] = real(&RunConfig::dropout);

        t["adv_reg"] = nested_real([](auto& c) -> auto& { return c.adversary.reg; }, true);
        t["adv_max_iterations"] =
            nested_int([](auto& c) -> auto& { return c.adversary.max_iterations; }, 1);
        t["adv_max_rows"] = nested_int([](auto& c) -> auto& { return c.adversary.max_rows; }, 1);
        t["mlp_hidden"] = nested_int([](auto& c) -> auto& { return c.mlp.hidden; }, 1);
        t["mlp_lr"] = nested_real([](auto& c) -> auto& { return c.mlp.lr; }, true);
        t["mlp_momentum"] = nested_real([](auto& c) -> auto& { return c.mlp.momentum; }, false);
        t["mlp_steps"] = nested_int([](auto& c) -> auto& { return c.mlp.steps; }, 1);
        t["mlp_restarts"] = integer(&RunConfig::mlp_restarts, 1);

        t["oracle_instances"] = integer(&RunConfig::oracle_instances, 1);
        t["oracle_anchors"] = integer(&RunConfig::oracle_anchors, Index{1});
        return t;
    }();
    return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& table = fields();
    const auto it = table.find(key);
    if (it == table.end()) throw InvalidArgument("unknown config key '" + key + "'");
    it->second.set(*this, key, trim(value));
    if (key == "dropout" && !(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
    if (key == "synth_band" && !(synth_band >= 0.0 && synth_band < 1.0))
        throw InvalidArgument("synth_band must lie in [0, 1)");
    if (key == "momentum_pre" && preimage.momentum >= 1.0) throw InvalidArgument("momentum_pre must be below 1");
    if (key == "mlp_momentum" && mlp.momentum >= 1.0) throw InvalidArgument("mlp_momentum must be below 1");
}

std::string RunConfig::snapshot() const {
    std::string out;
    for (const auto& [key, field] : fields()) {
        if (key == "out") continue;  // where results go does not change them
        out += key + "=" + field.get(*this) + "\n";
    }
    return out;
}

std::string RunConfig::hash() const {
    const std::string s = snapshot();
    return hex64(fnv1a64(s.data(), s.size()));
}

std::filesystem::path RunConfig::output_dir() const {
    if (const char* env = std::getenv("KCE_OUT"); env != nullptr && *env != '\0') return env;
    return out;
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash_pos = line.find('#'); hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": expected key = value");
        try {
            cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    RunConfig cfg;
    apply_config_text(cfg, buffer.str(), path.string());
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw InvalidArgument("override '" + assignment + "' is not key=value");
    cfg.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [key, field] : fields()) keys.push_back(key);
    return keys;
}

}  // namespace kce
