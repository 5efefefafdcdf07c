#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "wvsort/error.hpp"
#include "wvsort/metrics.hpp"

using namespace wvsort;

namespace {

// Binary case with class 1 as the positive class: TP=9, FP=1, FN=3, TN=7.
void binary_counts(std::vector<Label>& labels, std::vector<Label>& preds) {
    auto push = [&](Label t, Label p, int n) {
        for (int i = 0; i < n; ++i) {
            labels.push_back(t);
            preds.push_back(p);
        }
    };
    push(1, 1, 9);
    push(0, 1, 1);
    push(1, 0, 3);
    push(0, 0, 7);
}

}  // namespace

TEST_CASE("per-class precision, recall and f1 from counts") {
    std::vector<Label> labels, preds;
    binary_counts(labels, preds);
    const auto r = compute_report(labels, preds, 2);
    const auto& pos = r.per_class[1];
    CHECK(pos.precision == Catch::Approx(0.9));
    CHECK(pos.recall == Catch::Approx(0.75));
    CHECK(pos.f1 == Catch::Approx(2 * 0.9 * 0.75 / 1.65));
    CHECK(pos.f1 == Catch::Approx(0.8182).margin(1e-4));
    CHECK(pos.support == 12);
    CHECK(pos.predicted == 10);
    const auto& neg = r.per_class[0];
    CHECK(neg.precision == Catch::Approx(0.7));
    CHECK(neg.recall == Catch::Approx(7.0 / 8.0));
    CHECK(r.macro_precision == Catch::Approx((0.9 + 0.7) / 2));
    CHECK(r.macro_recall == Catch::Approx((0.75 + 0.875) / 2));
    CHECK(r.macro_f1 == Catch::Approx((pos.f1 + neg.f1) / 2));
    CHECK(r.accuracy == Catch::Approx(16.0 / 20.0));
    CHECK(r.count(1, 0) == 3);
    CHECK(r.count(0, 1) == 1);
    CHECK(r.tokens == 20);
}

TEST_CASE("perfect predictions score one") {
    std::vector<Label> labels = {0, 1, 2, 2, 1, 0, 3};
    const auto r = compute_report(labels, labels, 4);
    CHECK(r.macro_precision == 1.0);
    CHECK(r.macro_recall == 1.0);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.accuracy == 1.0);
}

TEST_CASE("macro averages skip classes absent from labels and predictions") {
    std::vector<Label> labels = {0, 0, 1, 1};
    const auto r = compute_report(labels, labels, 5);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.per_class[4].support == 0);
}

TEST_CASE("undefined ratios count as zero") {
    std::vector<Label> labels = {0, 0, 0};
    std::vector<Label> preds = {1, 1, 1};
    const auto r = compute_report(labels, preds, 2);
    CHECK(r.per_class[0].precision == 0.0);
    CHECK(r.per_class[0].recall == 0.0);
    CHECK(r.per_class[1].precision == 0.0);
    CHECK(r.per_class[1].recall == 0.0);
    CHECK(r.per_class[1].f1 == 0.0);
    CHECK(r.macro_f1 == 0.0);
}

TEST_CASE("uniform random guessing over 12 classes") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> u(0, 11);
    std::vector<Label> labels(200000), preds(200000);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = static_cast<Label>(u(rng));
        preds[i] = static_cast<Label>(u(rng));
    }
    const auto r = compute_report(labels, preds, 12);
    CHECK(r.accuracy == Catch::Approx(1.0 / 12).margin(0.01));
    CHECK(r.macro_f1 == Catch::Approx(1.0 / 12).margin(0.01));
}

TEST_CASE("confusion identities") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> u(0, 4);
    std::vector<Label> labels(5000), preds(5000);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = static_cast<Label>(u(rng));
        preds[i] = static_cast<Label>(rng() % 3 == 0 ? u(rng) : labels[i]);
    }
    const auto r = compute_report(labels, preds, 5);
    std::uint64_t total = 0, diag = 0;
    for (std::size_t t = 0; t < 5; ++t) {
        std::uint64_t row = 0, col = 0;
        for (std::size_t p = 0; p < 5; ++p) {
            row += r.count(t, p);
            col += r.count(p, t);
        }
        CHECK(row == r.per_class[t].support);
        CHECK(col == r.per_class[t].predicted);
        total += row;
        diag += r.count(t, t);
        const auto& m = r.per_class[t];
        CHECK(m.f1 == Catch::Approx(2 * m.precision * m.recall / (m.precision + m.recall)));
    }
    CHECK(total == labels.size());
    CHECK(r.accuracy == Catch::Approx(static_cast<double>(diag) / total));
}

TEST_CASE("argument validation") {
    std::vector<Label> a = {0, 1}, b = {0};
    CHECK_THROWS_AS(compute_report(a, b, 2), PreconditionError);
    CHECK_THROWS_AS(compute_report(a, a, 0), PreconditionError);
    std::vector<Label> c = {0, 2};
    CHECK_THROWS_AS(compute_report(c, c, 2), PreconditionError);
}

TEST_CASE("csv layouts") {
    std::vector<Label> labels, preds;
    binary_counts(labels, preds);
    auto r = compute_report(labels, preds, 2);
    r.metadata["seed"] = "4";
    std::ostringstream conf;
    write_confusion_csv(conf, r);
    CHECK(conf.str() == "true\\pred,0,1\n0,7,1\n1,3,9\n");
    std::ostringstream met;
    write_metrics_csv(met, r);
    std::istringstream lines(met.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "# seed=4");
    std::getline(lines, line);
    CHECK(line == "class,precision,recall,f1,support");
    std::getline(lines, line);
    CHECK(line.rfind("0,0.7,0.875,", 0) == 0);
    std::getline(lines, line);
    CHECK(line.rfind("1,0.9,0.75,", 0) == 0);
    CHECK(line.substr(line.rfind(',') + 1) == "12");
    std::getline(lines, line);
    CHECK(line.rfind("macro,", 0) == 0);
    std::getline(lines, line);
    CHECK(line == "accuracy,0.8,,,20");
    CHECK(!std::getline(lines, line));
}
