#ifndef AAPU_EXPERIMENT_HPP
#define AAPU_EXPERIMENT_HPP

/// Experiment plumbing shared by the CLI and the acceptance suite:
/// flat dotted-key config files, dataset resolution, run manifests and
/// on-disk artifacts (metrics.jsonl, checkpoint, histogram CSVs).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aapu/checkpoint.hpp"
#include "aapu/common.hpp"
#include "aapu/data.hpp"
#include "aapu/trainer.hpp"

namespace aapu {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Dataset resolution

struct DataConfig {
    enum class Kind { Sine, Csv, Dir } kind = Kind::Sine;
    int n_p = 100, n_u = 1000, n_test = 10000;
    std::uint64_t seed = 1;
    std::string positives_path, unlabeled_path, test_path, dir;
    std::optional<double> prior;  // required for Kind::Csv
    bool header = false;
};

inline PUDataset load_dataset(const DataConfig& dc) {
    switch (dc.kind) {
        case DataConfig::Kind::Sine:
            return generate_sine_dataset(dc.n_p, dc.n_u, dc.n_test, dc.seed);
        case DataConfig::Kind::Csv: {
            if (!dc.prior)
                throw ConfigError("data: csv datasets need an explicit prior");
            return load_csv_dataset(dc.positives_path, dc.unlabeled_path,
                                    dc.test_path, *dc.prior, dc.header);
        }
        case DataConfig::Kind::Dir: {
            double prior;
            if (dc.prior) {
                prior = *dc.prior;
            } else {
                std::ifstream in(dc.dir + "/manifest.json");
                if (!in)
                    throw DataError("data: cannot read " + dc.dir +
                                    "/manifest.json (pass an explicit prior?)");
                ordered_json m = ordered_json::parse(in);
                prior = m.at("prior").get<double>();
            }
            return load_csv_dataset(dc.dir + "/positives.csv",
                                    dc.dir + "/unlabeled.csv",
                                    dc.dir + "/test.csv", prior, dc.header);
        }
    }
    throw ConfigError("data: bad kind");
}

// ---------------------------------------------------------------------------
// Flat config files: `dotted.key = value`, '#' comments.

inline std::map<std::string, std::string> parse_config_file(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: " + key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_num(const std::string& v, const std::string& key) {
    std::istringstream ss(v);
    T out;
    ss >> out;
    if (ss.fail() || !(ss >> std::ws).eof())
        throw ConfigError("config: " + key + ": cannot parse '" + v + "'");
    return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

}  // namespace detail

inline LossKind loss_from_string(const std::string& s) {
    if (s == "sigmoid") return LossKind::Sigmoid;
    if (s == "logistic") return LossKind::Logistic;
    throw ConfigError("unknown surrogate loss '" + s + "'");
}

/// `1:1e-4,101:1e-5` -> [(1,1e-4),(101,1e-5)]
inline std::vector<std::pair<unsigned, double>> parse_lr_schedule(
    const std::string& s) {
    std::vector<std::pair<unsigned, double>> out;
    for (const auto& item : detail::split(s, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("lr schedule entry '" + item +
                              "' is not start_epoch:rate");
        out.emplace_back(
            detail::parse_num<unsigned>(item.substr(0, colon), "lr.schedule"),
            detail::parse_num<double>(item.substr(colon + 1), "lr.schedule"));
    }
    return out;
}

struct ExperimentConfig {
    TrainConfig train;
    DataConfig data;
};

/// Defaults follow the synthetic recipe: [2,200,600,1] with batch norm,
/// logistic loss, Adam wd 0.05, lr 1e-4 dropping to 1e-5 after epoch 100,
/// batch 128, 1000 epochs, selection of 1 point per epoch from epoch 200.
inline ExperimentConfig default_experiment() {
    ExperimentConfig e;
    e.train.method = Method::AAPU;
    e.train.risk.estimator = Estimator::AAPU;
    e.train.risk.loss = LossKind::Logistic;
    e.train.risk.prior = 0.4412;  // replaced by the dataset's prior on load
    e.train.spec = MlpSpec::make({2, 200, 600, 1}, true, 0.0, 0);
    e.train.epochs = 1000;
    e.train.batch_size = 128;
    e.train.lr_schedule = {{1, 1e-4}, {101, 1e-5}};
    e.train.weight_decay = 0.05;
    e.train.selection = {200, 1};
    e.train.seed = 1;
    return e;
}

inline void apply_config_entry(ExperimentConfig& e, const std::string& key,
                               const std::string& v) {
    using detail::parse_bool;
    using detail::parse_num;
    TrainConfig& t = e.train;
    DataConfig& d = e.data;
    if (key == "method") t.method = method_from_string(v);
    else if (key == "loss") t.risk.loss = loss_from_string(v);
    else if (key == "prior") t.risk.prior = parse_num<double>(v, key);
    else if (key == "nnpu.beta") t.risk.nnpu_beta = parse_num<double>(v, key);
    else if (key == "nnpu.gamma") t.risk.nnpu_gamma = parse_num<double>(v, key);
    else if (key == "risk.literal_normalization")
        t.risk.literal_normalization = parse_bool(v, key);
    else if (key == "net.hidden") {
        std::vector<int> dims{t.spec.layer_dims.front()};
        for (const auto& tok : detail::split(v, ','))
            dims.push_back(parse_num<int>(tok, key));
        dims.push_back(1);
        const bool bn = t.spec.use_batchnorm.empty() || t.spec.use_batchnorm[0];
        const double dr = t.spec.dropout_rates.empty() ? 0.0 : t.spec.dropout_rates[0];
        t.spec = MlpSpec::make(std::move(dims), bn, dr, t.spec.seed);
    } else if (key == "net.input_dim") {
        auto dims = t.spec.layer_dims;
        dims.front() = parse_num<int>(v, key);
        const bool bn = t.spec.use_batchnorm.empty() || t.spec.use_batchnorm[0];
        const double dr = t.spec.dropout_rates.empty() ? 0.0 : t.spec.dropout_rates[0];
        t.spec = MlpSpec::make(std::move(dims), bn, dr, t.spec.seed);
    } else if (key == "net.batchnorm") {
        const bool bn = parse_bool(v, key);
        t.spec.use_batchnorm.assign(t.spec.use_batchnorm.size(), bn);
    } else if (key == "net.dropout") {
        const double dr = parse_num<double>(v, key);
        t.spec.dropout_rates.assign(t.spec.dropout_rates.size(), dr);
    } else if (key == "epochs") t.epochs = parse_num<unsigned>(v, key);
    else if (key == "batch_size") t.batch_size = parse_num<int>(v, key);
    else if (key == "lr.schedule") t.lr_schedule = parse_lr_schedule(v);
    else if (key == "weight_decay") t.weight_decay = parse_num<double>(v, key);
    else if (key == "selection.start_epoch")
        t.selection.start_epoch = parse_num<unsigned>(v, key);
    else if (key == "selection.per_epoch")
        t.selection.per_epoch = parse_num<unsigned>(v, key);
    else if (key == "selection.fresh_picks")
        t.selection.fresh_picks = parse_bool(v, key);
    else if (key == "oracle.extra_p") t.oracle_extra_p = parse_num<unsigned>(v, key);
    else if (key == "seed") t.seed = parse_num<std::uint64_t>(v, key);
    else if (key == "histogram.epochs") {
        t.record_histogram_epochs.clear();
        for (const auto& tok : detail::split(v, ','))
            t.record_histogram_epochs.push_back(parse_num<unsigned>(tok, key));
    } else if (key == "data.kind") {
        if (v == "sine") d.kind = DataConfig::Kind::Sine;
        else if (v == "csv") d.kind = DataConfig::Kind::Csv;
        else if (v == "dir") d.kind = DataConfig::Kind::Dir;
        else throw ConfigError("config: data.kind: unknown kind '" + v + "'");
    } else if (key == "data.n_p") d.n_p = parse_num<int>(v, key);
    else if (key == "data.n_u") d.n_u = parse_num<int>(v, key);
    else if (key == "data.n_test") d.n_test = parse_num<int>(v, key);
    else if (key == "data.seed") d.seed = parse_num<std::uint64_t>(v, key);
    else if (key == "data.positives") d.positives_path = v;
    else if (key == "data.unlabeled") d.unlabeled_path = v;
    else if (key == "data.test") d.test_path = v;
    else if (key == "data.dir") { d.dir = v; d.kind = DataConfig::Kind::Dir; }
    else if (key == "data.prior") d.prior = parse_num<double>(v, key);
    else if (key == "data.header") d.header = parse_bool(v, key);
    else throw ConfigError("config: unknown key '" + key + "'");
}

inline void apply_config_file(ExperimentConfig& e, const std::string& path) {
    for (const auto& [k, v] : parse_config_file(path)) apply_config_entry(e, k, v);
}

// ---------------------------------------------------------------------------
// Manifests and artifacts

inline ordered_json config_to_json(const ExperimentConfig& e) {
    const TrainConfig& t = e.train;
    ordered_json j;
    j["method"] = to_string(t.method);
    j["loss"] = to_string(t.risk.loss);
    j["prior"] = t.risk.prior;
    j["nnpu"] = {{"beta", t.risk.nnpu_beta}, {"gamma", t.risk.nnpu_gamma}};
    j["literal_normalization"] = t.risk.literal_normalization;
    j["net"] = {{"layer_dims", t.spec.layer_dims},
                {"batchnorm", std::vector<bool>(t.spec.use_batchnorm.begin(),
                                                t.spec.use_batchnorm.end())},
                {"dropout", t.spec.dropout_rates}};
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    ordered_json sched = ordered_json::array();
    for (const auto& [start, lr] : t.lr_schedule)
        sched.push_back({{"start_epoch", start}, {"lr", lr}});
    j["lr_schedule"] = sched;
    j["weight_decay"] = t.weight_decay;
    j["selection"] = {{"start_epoch", t.selection.start_epoch},
                      {"per_epoch", t.selection.per_epoch},
                      {"fresh_picks", t.selection.fresh_picks}};
    j["oracle_extra_p"] = t.oracle_extra_p;
    j["seed"] = t.seed;
    j["histogram_epochs"] = t.record_histogram_epochs;
    const DataConfig& d = e.data;
    ordered_json dj;
    switch (d.kind) {
        case DataConfig::Kind::Sine:
            dj = {{"kind", "sine"}, {"n_p", d.n_p}, {"n_u", d.n_u},
                  {"n_test", d.n_test}, {"seed", d.seed}};
            break;
        case DataConfig::Kind::Csv:
            dj = {{"kind", "csv"}, {"positives", d.positives_path},
                  {"unlabeled", d.unlabeled_path}, {"test", d.test_path},
                  {"header", d.header}};
            if (d.prior) dj["prior"] = *d.prior;
            break;
        case DataConfig::Kind::Dir:
            dj = {{"kind", "dir"}, {"dir", d.dir}, {"header", d.header}};
            if (d.prior) dj["prior"] = *d.prior;
            break;
    }
    j["data"] = dj;
    return j;
}

inline ordered_json record_to_json(const EpochRecord& r) {
    ordered_json j;
    j["epoch"] = r.epoch;
    j["objective_mean"] = r.objective_mean;
    j["negative_part_mean"] = r.negative_part_mean;
    j["clamp_fraction"] = r.clamp_fraction;
    j["test_error"] = r.test_error;
    j["selected_total"] = r.selected_total;
    j["selection_purity"] =
        r.selection_purity ? ordered_json(*r.selection_purity) : ordered_json();
    j["selection_recall"] =
        r.selection_recall ? ordered_json(*r.selection_recall) : ordered_json();
    return j;
}

inline void write_metrics_jsonl(const std::vector<EpochRecord>& records,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline std::vector<ordered_json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    std::vector<ordered_json> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(ordered_json::parse(line));
    return out;
}

/// Runs one configured training and writes metrics.jsonl, checkpoint.bin,
/// per-epoch histogram CSVs and manifest.json under out_dir.
inline TrainResult run_experiment(const ExperimentConfig& e,
                                  const PUDataset& data,
                                  const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    TrainResult res = train(e.train, data);
    write_metrics_jsonl(res.records, out_dir + "/metrics.jsonl");
    save_checkpoint(res.params, out_dir + "/checkpoint.bin");
    for (const auto& h : res.histograms)
        write_histogram_csv(h, out_dir + "/histogram_epoch_" +
                                   std::to_string(h.epoch) + ".csv");
    ordered_json manifest;
    manifest["library_version"] = kVersion;
    manifest["config"] = config_to_json(e);
    manifest["seed"] = e.train.seed;
    char fp[32];
    std::snprintf(fp, sizeof fp, "%016llx",
                  static_cast<unsigned long long>(data.fingerprint()));
    manifest["dataset_fingerprint"] = fp;
    manifest["outputs"] = {{"metrics", out_dir + "/metrics.jsonl"},
                           {"checkpoint", out_dir + "/checkpoint.bin"}};
    std::ofstream mout(out_dir + "/manifest.json");
    mout << manifest.dump(2) << '\n';
    return res;
}

}  // namespace aapu

#endif
