#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include <doctest.h>

#include "aapu/data.hpp"

using namespace aapu;
namespace fs = std::filesystem;

TEST_CASE("sine generator: sizes, shift rule and prior") {
    const PUDataset d = generate_sine_dataset(100, 1000, 10000, 1);
    CHECK(d.n_p() == 100);
    CHECK(d.n_u() == 1000);
    CHECK(d.n_test() == 10000);
    CHECK(d.dim() == 2);
    REQUIRE(d.unlabeled_truth);

    // Positives: unshifted x2 lies above the boundary, so stored
    // x2 - 0.2 > sin(x1). Negatives the other way round.
    for (int i = 0; i < d.n_p(); ++i)
        CHECK(d.positives(i, 1) - 0.2 > std::sin(d.positives(i, 0)));
    for (int i = 0; i < d.n_u(); ++i) {
        const double x1 = d.unlabeled(i, 0), x2 = d.unlabeled(i, 1);
        if ((*d.unlabeled_truth)[i] > 0)
            CHECK(x2 - 0.2 > std::sin(x1));
        else
            CHECK(x2 + 0.2 <= std::sin(x1) + 1e-12);
    }
    for (int i = 0; i < d.n_test(); ++i) {
        const double x1 = d.test_features(i, 0), x2 = d.test_features(i, 1);
        if (d.test_labels[i] > 0)
            CHECK(x2 - 0.2 > std::sin(x1));
        else
            CHECK(x2 + 0.2 <= std::sin(x1) + 1e-12);
    }

    CHECK(d.prior > 0.42);
    CHECK(d.prior < 0.46);
    const int pos = static_cast<int>(
        std::count(d.test_labels.begin(), d.test_labels.end(), +1));
    CHECK(d.prior == doctest::Approx(pos / 10000.0));
}

TEST_CASE("sine generator determinism and seed sensitivity") {
    const PUDataset a = generate_sine_dataset(20, 50, 100, 9);
    const PUDataset b = generate_sine_dataset(20, 50, 100, 9);
    CHECK(a.positives == b.positives);
    CHECK(a.unlabeled == b.unlabeled);
    CHECK(a.test_features == b.test_features);
    CHECK(a.fingerprint() == b.fingerprint());
    const PUDataset c = generate_sine_dataset(20, 50, 100, 10);
    CHECK(a.fingerprint() != c.fingerprint());
}

TEST_CASE("generator rejects non-positive counts") {
    CHECK_THROWS_AS(generate_sine_dataset(0, 10, 10, 1), ConfigError);
    CHECK_THROWS_AS(generate_sine_dataset(10, 0, 10, 1), ConfigError);
}

TEST_CASE("csv export then load round-trips element-wise") {
    const PUDataset d = generate_sine_dataset(15, 40, 30, 3);
    const std::string dir = "csv_roundtrip_test";
    export_dataset_csv(d, dir);
    const PUDataset r = load_csv_dataset(dir + "/positives.csv",
                                         dir + "/unlabeled.csv",
                                         dir + "/test.csv", d.prior);
    CHECK(r.positives == d.positives);
    CHECK(r.unlabeled == d.unlabeled);
    CHECK(r.test_features == d.test_features);
    CHECK(r.test_labels == d.test_labels);
    REQUIRE(r.unlabeled_truth);
    CHECK(*r.unlabeled_truth == *d.unlabeled_truth);
    CHECK(r.prior == d.prior);
    fs::remove_all(dir);
}

TEST_CASE("csv loader error reporting") {
    const std::string dir = "csv_error_test";
    fs::create_directories(dir);
    std::ofstream(dir + "/positives.csv") << "1.0,2.0\n3.0,4.0\n";
    std::ofstream(dir + "/unlabeled.csv") << "1.0,2.0\n5.0\n";
    std::ofstream(dir + "/test.csv") << "1.0,2.0,1\n";

    CHECK_THROWS_WITH_AS(
        load_csv_dataset(dir + "/positives.csv", dir + "/unlabeled.csv",
                         dir + "/test.csv", 0.4),
        doctest::Contains("row 2"), DataError);

    std::ofstream(dir + "/unlabeled.csv") << "1.0,2.0\n";
    CHECK_THROWS_AS(load_csv_dataset(dir + "/positives.csv",
                                     dir + "/unlabeled.csv", dir + "/test.csv",
                                     1.2),
                    ConfigError);

    std::ofstream(dir + "/test.csv") << "1.0,2.0,3\n";
    CHECK_THROWS_WITH_AS(
        load_csv_dataset(dir + "/positives.csv", dir + "/unlabeled.csv",
                         dir + "/test.csv", 0.4),
        doctest::Contains("label"), DataError);

    std::ofstream(dir + "/test.csv") << "1.0,abc,1\n";
    CHECK_THROWS_AS(load_csv_dataset(dir + "/positives.csv",
                                     dir + "/unlabeled.csv", dir + "/test.csv",
                                     0.4),
                    DataError);
    fs::remove_all(dir);
}

TEST_CASE("minibatch plan: proportional shares, exact partition") {
    const MinibatchPlan plan = make_minibatches(100, 1000, 0, 128, 1);
    CHECK(plan.batches.size() == 9);
    std::set<int> p_seen, u_seen;
    for (const auto& b : plan.batches) {
        CHECK(b.p_indices.size() >= 11);
        CHECK(b.p_indices.size() <= 12);
        CHECK(b.u_indices.size() >= 111);
        CHECK(b.u_indices.size() <= 112);
        CHECK(b.s_indices.empty());
        p_seen.insert(b.p_indices.begin(), b.p_indices.end());
        u_seen.insert(b.u_indices.begin(), b.u_indices.end());
    }
    CHECK(p_seen.size() == 100);  // disjoint + complete
    CHECK(u_seen.size() == 1000);
}

TEST_CASE("minibatch plan: tiny inputs and determinism") {
    const MinibatchPlan one = make_minibatches(1, 10, 0, 11, 5);
    CHECK(one.batches.size() == 1);
    CHECK(one.batches[0].p_indices.size() == 1);
    CHECK(one.batches[0].u_indices.size() == 10);

    const MinibatchPlan a = make_minibatches(13, 57, 4, 16, 77);
    const MinibatchPlan b = make_minibatches(13, 57, 4, 16, 77);
    REQUIRE(a.batches.size() == b.batches.size());
    for (std::size_t i = 0; i < a.batches.size(); ++i) {
        CHECK(a.batches[i].p_indices == b.batches[i].p_indices);
        CHECK(a.batches[i].u_indices == b.batches[i].u_indices);
        CHECK(a.batches[i].s_indices == b.batches[i].s_indices);
    }
    // every batch keeps at least one P and one U even when P is scarce
    const MinibatchPlan scarce = make_minibatches(2, 100, 0, 16, 3);
    for (const auto& b2 : scarce.batches) {
        CHECK(!b2.p_indices.empty());
        CHECK(!b2.u_indices.empty());
    }

    CHECK_THROWS_AS(make_minibatches(0, 10, 0, 8, 1), ConfigError);
    CHECK_THROWS_AS(make_minibatches(10, 10, 0, 1, 1), ConfigError);
}

TEST_CASE("minibatch plan partitions S as its own stream") {
    const MinibatchPlan plan = make_minibatches(30, 200, 25, 32, 11);
    std::set<int> s_seen;
    std::size_t s_total = 0;
    for (const auto& b : plan.batches) {
        s_seen.insert(b.s_indices.begin(), b.s_indices.end());
        s_total += b.s_indices.size();
    }
    CHECK(s_total == 25);
    CHECK(s_seen.size() == 25);
}
