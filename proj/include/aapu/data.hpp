#ifndef AAPU_DATA_HPP
#define AAPU_DATA_HPP

/// Dataset construction: the 2-D sine-boundary synthetic generator, CSV
/// ingestion/export, and stratified minibatch planning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aapu/common.hpp"

namespace aapu {

struct PUDataset {
    Matrix positives;       // n_p x d
    Matrix unlabeled;       // n_u x d
    std::optional<std::vector<int>> unlabeled_truth;  // +1/-1, diagnostics only
    Matrix test_features;   // n_test x d
    std::vector<int> test_labels;
    double prior = 0.5;

    int dim() const { return static_cast<int>(positives.cols()); }
    int n_p() const { return static_cast<int>(positives.rows()); }
    int n_u() const { return static_cast<int>(unlabeled.rows()); }
    int n_test() const { return static_cast<int>(test_features.rows()); }

    std::uint64_t fingerprint() const {
        std::uint64_t h = fnv1a(positives.data(),
                                sizeof(double) * positives.size());
        h = fnv1a(unlabeled.data(), sizeof(double) * unlabeled.size(), h);
        h = fnv1a(test_features.data(), sizeof(double) * test_features.size(), h);
        h = fnv1a(test_labels.data(), sizeof(int) * test_labels.size(), h);
        if (unlabeled_truth)
            h = fnv1a(unlabeled_truth->data(),
                      sizeof(int) * unlabeled_truth->size(), h);
        return fnv1a(&prior, sizeof prior, h);
    }
};

/// Points with sin(x1) < x2 are positive; each point is then shifted away
/// from the boundary by 0.2 along x2 according to its label. The prior is
/// the empirical positive fraction of the test draw.
inline PUDataset generate_sine_dataset(int n_p, int n_u, int n_test,
                                       std::uint64_t seed) {
    if (n_p <= 0 || n_u <= 0 || n_test <= 0)
        throw ConfigError("generate_sine_dataset: counts must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dx1(0.0, 10.0);
    std::uniform_real_distribution<double> dx2(-1.5, 1.5);
    auto draw = [&](double& x1, double& x2, int& label) {
        x1 = dx1(rng);
        x2 = dx2(rng);
        label = std::sin(x1) < x2 ? +1 : -1;
        x2 += label > 0 ? 0.2 : -0.2;
    };

    PUDataset d;
    d.positives.resize(n_p, 2);
    for (int i = 0; i < n_p;) {
        double x1, x2;
        int label;
        draw(x1, x2, label);
        if (label > 0) {
            d.positives(i, 0) = x1;
            d.positives(i, 1) = x2;
            ++i;
        }
    }
    d.unlabeled.resize(n_u, 2);
    d.unlabeled_truth.emplace(n_u);
    for (int i = 0; i < n_u; ++i) {
        double x1, x2;
        int label;
        draw(x1, x2, label);
        d.unlabeled(i, 0) = x1;
        d.unlabeled(i, 1) = x2;
        (*d.unlabeled_truth)[i] = label;
    }
    d.test_features.resize(n_test, 2);
    d.test_labels.resize(n_test);
    int pos = 0;
    for (int i = 0; i < n_test; ++i) {
        double x1, x2;
        int label;
        draw(x1, x2, label);
        d.test_features(i, 0) = x1;
        d.test_features(i, 1) = x2;
        d.test_labels[i] = label;
        if (label > 0) ++pos;
    }
    d.prior = static_cast<double>(pos) / n_test;
    return d;
}

namespace detail {

inline std::vector<std::vector<double>> parse_csv(const std::string& path,
                                                  bool skip_header) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_header && lineno == 1) continue;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(cell, &used);
                if (used != cell.size() &&
                    cell.find_first_not_of(" \t\r", used) != std::string::npos)
                    throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": cannot parse '" + cell + "' as a number");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path + ": no data rows");
    return rows;
}

inline int check_label(double v, const std::string& path, std::size_t rowno) {
    if (v == 1.0) return +1;
    if (v == -1.0) return -1;
    throw DataError(path + ": row " + std::to_string(rowno + 1) +
                    ": label must be +1 or -1, got " + std::to_string(v));
}

}  // namespace detail

/// Assembles a dataset from three CSV files. The test file carries a
/// trailing +1/-1 label column; the unlabeled file may carry an optional
/// trailing truth column (detected by width against the positives file).
inline PUDataset load_csv_dataset(const std::string& positives_path,
                                  const std::string& unlabeled_path,
                                  const std::string& test_path, double prior,
                                  bool header = false) {
    if (!(prior > 0.0 && prior < 1.0))
        throw ConfigError("load_csv_dataset: prior must lie strictly in (0,1)");
    auto pos_rows = detail::parse_csv(positives_path, header);
    const std::size_t d = pos_rows[0].size();
    PUDataset ds;
    ds.prior = prior;
    ds.positives.resize(pos_rows.size(), d);
    for (std::size_t i = 0; i < pos_rows.size(); ++i) {
        if (pos_rows[i].size() != d)
            throw DataError(positives_path + ": row " + std::to_string(i + 1) +
                            " has " + std::to_string(pos_rows[i].size()) +
                            " columns, expected " + std::to_string(d));
        for (std::size_t j = 0; j < d; ++j) ds.positives(i, j) = pos_rows[i][j];
    }

    auto u_rows = detail::parse_csv(unlabeled_path, header);
    const bool has_truth = u_rows[0].size() == d + 1;
    if (!has_truth && u_rows[0].size() != d)
        throw DataError(unlabeled_path + ": row 1 has " +
                        std::to_string(u_rows[0].size()) +
                        " columns, expected " + std::to_string(d) + " or " +
                        std::to_string(d + 1));
    ds.unlabeled.resize(u_rows.size(), d);
    if (has_truth) ds.unlabeled_truth.emplace(u_rows.size());
    for (std::size_t i = 0; i < u_rows.size(); ++i) {
        if (u_rows[i].size() != d + (has_truth ? 1 : 0))
            throw DataError(unlabeled_path + ": row " + std::to_string(i + 1) +
                            " has " + std::to_string(u_rows[i].size()) +
                            " columns, expected " +
                            std::to_string(d + (has_truth ? 1 : 0)));
        for (std::size_t j = 0; j < d; ++j) ds.unlabeled(i, j) = u_rows[i][j];
        if (has_truth)
            (*ds.unlabeled_truth)[i] =
                detail::check_label(u_rows[i][d], unlabeled_path, i);
    }

    auto t_rows = detail::parse_csv(test_path, header);
    ds.test_features.resize(t_rows.size(), d);
    ds.test_labels.resize(t_rows.size());
    for (std::size_t i = 0; i < t_rows.size(); ++i) {
        if (t_rows[i].size() != d + 1)
            throw DataError(test_path + ": row " + std::to_string(i + 1) +
                            " has " + std::to_string(t_rows[i].size()) +
                            " columns, expected " + std::to_string(d + 1));
        for (std::size_t j = 0; j < d; ++j) ds.test_features(i, j) = t_rows[i][j];
        ds.test_labels[i] = detail::check_label(t_rows[i][d], test_path, i);
    }
    return ds;
}

namespace detail {
inline void write_row(std::ofstream& out, const Matrix& m, Eigen::Index i,
                      const int* label) {
    char buf[64];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        out << buf;
        if (j + 1 < m.cols() || label) out << ',';
    }
    if (label) out << *label;
    out << '\n';
}
}  // namespace detail

/// Writes positives.csv, unlabeled.csv (with truth column when present)
/// and test.csv under dir.
inline void export_dataset_csv(const PUDataset& d, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(dir + "/positives.csv");
        if (!out) throw DataError("cannot write " + dir + "/positives.csv");
        for (Eigen::Index i = 0; i < d.positives.rows(); ++i)
            detail::write_row(out, d.positives, i, nullptr);
    }
    {
        std::ofstream out(dir + "/unlabeled.csv");
        if (!out) throw DataError("cannot write " + dir + "/unlabeled.csv");
        for (Eigen::Index i = 0; i < d.unlabeled.rows(); ++i) {
            const int* truth =
                d.unlabeled_truth ? &(*d.unlabeled_truth)[i] : nullptr;
            detail::write_row(out, d.unlabeled, i, truth);
        }
    }
    {
        std::ofstream out(dir + "/test.csv");
        if (!out) throw DataError("cannot write " + dir + "/test.csv");
        for (Eigen::Index i = 0; i < d.test_features.rows(); ++i)
            detail::write_row(out, d.test_features, i, &d.test_labels[i]);
    }
}

struct Minibatch {
    std::vector<int> p_indices, u_indices, s_indices;
};

struct MinibatchPlan {
    std::vector<Minibatch> batches;
    std::uint64_t epoch_seed = 0;
};

/// Splits shuffled P, U and S index streams into ceil(total/batch_size)
/// batches with floor-proportional shares; remainders go to the earliest
/// batches. The batch count is capped so that every batch keeps at least
/// one P and one U index.
inline MinibatchPlan make_minibatches(int n_p, int n_u, int n_s, int batch_size,
                                      std::uint64_t epoch_seed) {
    if (batch_size < 2) throw ConfigError("make_minibatches: batch_size < 2");
    if (n_p < 1 || n_u < 1)
        throw ConfigError("make_minibatches: need at least one P and one U");
    if (n_s < 0) throw ConfigError("make_minibatches: negative n_s");

    const int total = n_p + n_u + n_s;
    int nt = (total + batch_size - 1) / batch_size;
    nt = std::max(1, std::min({nt, n_p, n_u}));

    std::mt19937_64 rng(epoch_seed);
    auto shuffled = [&](int n) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        return idx;
    };
    const auto p_idx = shuffled(n_p);
    const auto u_idx = shuffled(n_u);
    const auto s_idx = shuffled(n_s);

    MinibatchPlan plan;
    plan.epoch_seed = epoch_seed;
    plan.batches.resize(nt);
    auto distribute = [&](const std::vector<int>& idx,
                          std::vector<int> Minibatch::*member) {
        const int n = static_cast<int>(idx.size());
        const int base = n / nt;
        const int rem = n % nt;
        int cursor = 0;
        for (int b = 0; b < nt; ++b) {
            const int take = base + (b < rem ? 1 : 0);
            auto& dst = plan.batches[b].*member;
            dst.assign(idx.begin() + cursor, idx.begin() + cursor + take);
            cursor += take;
        }
    };
    distribute(p_idx, &Minibatch::p_indices);
    distribute(u_idx, &Minibatch::u_indices);
    distribute(s_idx, &Minibatch::s_indices);
    return plan;
}

}  // namespace aapu

#endif
