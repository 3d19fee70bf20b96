// Command-line surface: dataset generation, training runs and method
// comparisons. Exit codes: 0 success, 1 partial comparison failure,
// 2 configuration/usage error, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aapu/experiment.hpp"

namespace fs = std::filesystem;
using aapu::ordered_json;

namespace {

std::string output_root() {
    const char* env = std::getenv("AAPU_OUT_ROOT");
    return env ? env : "runs";
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    const auto dots = s.find("..");
    if (dots != std::string::npos) {
        const auto lo = std::stoull(s.substr(0, dots));
        const auto hi = std::stoull(s.substr(dots + 2));
        if (hi < lo) throw aapu::ConfigError("seeds: bad range '" + s + "'");
        for (auto v = lo; v <= hi; ++v) seeds.push_back(v);
    } else {
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
    }
    if (seeds.empty()) throw aapu::ConfigError("seeds: empty list");
    return seeds;
}

int cmd_generate(int n_p, int n_u, int n_test, std::uint64_t seed,
                 std::string out_dir) {
    if (out_dir.empty()) out_dir = output_root() + "/generate-seed" + std::to_string(seed);
    const aapu::PUDataset d = aapu::generate_sine_dataset(n_p, n_u, n_test, seed);
    aapu::export_dataset_csv(d, out_dir);
    ordered_json manifest;
    manifest["n_p"] = d.n_p();
    manifest["n_u"] = d.n_u();
    manifest["n_test"] = d.n_test();
    manifest["dim"] = d.dim();
    manifest["prior"] = d.prior;
    manifest["seed"] = seed;
    std::ofstream out(out_dir + "/manifest.json");
    if (!out) throw aapu::DataError("cannot write " + out_dir + "/manifest.json");
    out << manifest.dump(2) << '\n';
    std::cout << "wrote dataset to " << out_dir << " (prior " << d.prior << ")\n";
    return 0;
}

struct TrainArgs {
    std::string config, method, histogram_epochs, out_dir, data_dir;
    std::optional<std::uint64_t> seed;
};

aapu::ExperimentConfig resolve_experiment(const TrainArgs& a) {
    aapu::ExperimentConfig e = aapu::default_experiment();
    if (!a.config.empty()) aapu::apply_config_file(e, a.config);
    // Flags override file values.
    if (!a.method.empty()) aapu::apply_config_entry(e, "method", a.method);
    if (a.seed) e.train.seed = *a.seed;
    if (!a.histogram_epochs.empty())
        aapu::apply_config_entry(e, "histogram.epochs", a.histogram_epochs);
    if (!a.data_dir.empty()) aapu::apply_config_entry(e, "data.dir", a.data_dir);
    return e;
}

int run_one(aapu::ExperimentConfig e, const std::string& out_dir) {
    const aapu::PUDataset data = aapu::load_dataset(e.data);
    if (e.data.kind != aapu::DataConfig::Kind::Csv || !e.data.prior)
        e.train.risk.prior = data.prior;
    const aapu::TrainResult res = aapu::run_experiment(e, data, out_dir);
    std::cout << "final test error: " << res.records.back().test_error << '\n';
    return 0;
}

int cmd_train(const TrainArgs& a) {
    aapu::ExperimentConfig e = resolve_experiment(a);
    std::string out_dir = a.out_dir;
    if (out_dir.empty())
        out_dir = output_root() + "/train-" + aapu::to_string(e.train.method) +
                  "-seed" + std::to_string(e.train.seed);
    return run_one(std::move(e), out_dir);
}

struct CurveStats {
    std::vector<double> mean, variance;  // per epoch, across seeds
};

CurveStats curve_stats(const std::vector<std::vector<double>>& per_seed) {
    CurveStats c;
    if (per_seed.empty()) return c;
    const std::size_t T = per_seed.front().size();
    c.mean.assign(T, 0.0);
    c.variance.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double m = 0.0;
        for (const auto& run : per_seed) m += run[t];
        m /= per_seed.size();
        double v = 0.0;
        for (const auto& run : per_seed) v += (run[t] - m) * (run[t] - m);
        c.mean[t] = m;
        c.variance[t] = v / per_seed.size();
    }
    return c;
}

int cmd_compare(const std::string& methods_arg, const std::string& seeds_arg,
                const std::string& config, std::string out_dir) {
    std::vector<std::string> methods;
    {
        std::stringstream ss(methods_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) methods.push_back(tok);
    }
    if (methods.size() < 2)
        throw aapu::ConfigError("compare: need at least two methods");
    for (const auto& m : methods) aapu::method_from_string(m);  // validate early
    const auto seeds = parse_seeds(seeds_arg);
    if (out_dir.empty()) out_dir = output_root() + "/compare";
    fs::create_directories(out_dir);

    bool any_failed = false;
    std::map<std::string, std::vector<std::vector<double>>> curves;
    std::map<std::string, std::vector<double>> final_errors, last100;
    for (const auto& method : methods) {
        for (const auto seed : seeds) {
            TrainArgs a;
            a.config = config;
            a.method = method;
            a.seed = seed;
            const std::string cell =
                out_dir + "/" + method + "-seed" + std::to_string(seed);
            std::cout << "running " << method << " seed " << seed << "...\n";
            try {
                aapu::ExperimentConfig e = resolve_experiment(a);
                const aapu::PUDataset data = aapu::load_dataset(e.data);
                if (e.data.kind != aapu::DataConfig::Kind::Csv || !e.data.prior)
                    e.train.risk.prior = data.prior;
                const auto res = aapu::run_experiment(e, data, cell);
                std::vector<double> errs;
                errs.reserve(res.records.size());
                for (const auto& r : res.records) errs.push_back(r.test_error);
                const std::size_t tail = std::min<std::size_t>(100, errs.size());
                double tail_mean = 0.0;
                for (std::size_t i = errs.size() - tail; i < errs.size(); ++i)
                    tail_mean += errs[i];
                tail_mean /= tail;
                final_errors[method].push_back(errs.back());
                last100[method].push_back(tail_mean);
                curves[method].push_back(std::move(errs));
            } catch (const std::exception& ex) {
                std::cerr << "cell " << method << "/seed" << seed
                          << " failed: " << ex.what() << '\n';
                any_failed = true;
            }
        }
    }

    // Plot-ready per-epoch curves and the final summary table.
    for (const auto& [method, runs] : curves) {
        const CurveStats c = curve_stats(runs);
        std::ofstream out(out_dir + "/" + method + "_curve.csv");
        out << "epoch,test_error_mean,test_error_variance\n";
        for (std::size_t t = 0; t < c.mean.size(); ++t)
            out << (t + 1) << ',' << std::setprecision(17) << c.mean[t] << ','
                << c.variance[t] << '\n';
    }
    std::ofstream summary(out_dir + "/summary.csv");
    summary << "method,final_error_mean,final_error_variance,last100_error_mean\n";
    std::cout << "\nmethod          final_error    last100_mean\n";
    for (const auto& method : methods) {
        if (!final_errors.count(method)) continue;
        const auto& fe = final_errors[method];
        double m = 0.0;
        for (double v : fe) m += v;
        m /= fe.size();
        double var = 0.0;
        for (double v : fe) var += (v - m) * (v - m);
        var /= fe.size();
        double l100 = 0.0;
        for (double v : last100[method]) l100 += v;
        l100 /= last100[method].size();
        summary << method << ',' << std::setprecision(17) << m << ',' << var
                << ',' << l100 << '\n';
        std::cout << std::left << std::setw(16) << method << std::setprecision(5)
                  << std::setw(15) << m << l100 << '\n';
    }
    return any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PU learning experiments: PN / uPU / nnPU / aaPU"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "generate a synthetic sine-boundary dataset");
    int n_p = 100, n_u = 1000, n_test = 10000;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--n-p", n_p, "number of labeled positives")
        ->check(CLI::PositiveNumber);
    gen->add_option("--n-u", n_u, "number of unlabeled points")
        ->check(CLI::PositiveNumber);
    gen->add_option("--n-test", n_test, "number of test points")
        ->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "rng seed");
    gen->add_option("--out-dir", gen_out, "output directory");

    auto* tr = app.add_subcommand("train", "train one model");
    TrainArgs targs;
    std::uint64_t train_seed = 0;
    tr->add_option("--config", targs.config, "flat key=value config file")
        ->check(CLI::ExistingFile);
    tr->add_option("--method", targs.method, "pn|upu|nnpu|nnpu_plus_p|aapu");
    auto* seed_opt = tr->add_option("--seed", train_seed, "rng seed");
    tr->add_option("--histogram-epochs", targs.histogram_epochs,
                   "comma list of epochs to dump loss histograms at");
    tr->add_option("--out-dir", targs.out_dir, "output directory");
    tr->add_option("--data-dir", targs.data_dir,
                   "dataset directory produced by 'generate'");

    auto* cmp = app.add_subcommand("compare", "run a (method x seed) grid");
    std::string cmp_methods, cmp_seeds = "1..5", cmp_config, cmp_out;
    cmp->add_option("--methods", cmp_methods, "comma list of methods")->required();
    cmp->add_option("--seeds", cmp_seeds, "comma list or lo..hi range");
    cmp->add_option("--config", cmp_config, "flat key=value config file")
        ->check(CLI::ExistingFile);
    cmp->add_option("--out-dir", cmp_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(n_p, n_u, n_test, gen_seed, gen_out);
        if (tr->parsed()) {
            if (seed_opt->count()) targs.seed = train_seed;
            return cmd_train(targs);
        }
        if (cmp->parsed())
            return cmd_compare(cmp_methods, cmp_seeds, cmp_config, cmp_out);
    } catch (const aapu::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const aapu::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
