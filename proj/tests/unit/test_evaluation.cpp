#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "fsbench/diagnostics.hpp"
#include "fsbench/evaluation.hpp"
#include "fsbench/synth.hpp"

using namespace fsbench;
namespace fs = std::filesystem;

namespace {

RelevanceTruth d2_truth() {
    SeededRng rng(1);
    return make_preset("d2", rng).truth;
}

Dataset two_blobs(SeededRng& rng, std::size_t per_class) {
    Matrix m(2 * per_class, 3);
    std::vector<int> labels(2 * per_class);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        labels[i] = i < per_class ? 1 : 2;
        for (std::size_t f = 0; f < 3; ++f) m(i, f) = (labels[i] == 1 ? -5.0 : 5.0) + rng.normal();
    }
    return Dataset(std::move(m), labels);
}

FeatureSet all_of(std::size_t n) {
    FeatureSet s;
    for (std::size_t f = 0; f < n; ++f) s.insert(f);
    return s;
}

ClassifyConfig quick_classify() {
    ClassifyConfig c;
    c.som.iterations = 10;
    c.gsom.iterations = 10;
    return c;
}

}  // namespace

TEST(FsMetrics, ExactClassOneRow) {
    const auto m = fs_metrics(FeatureSet{0, 1, 2}, d2_truth(), 28);
    ASSERT_EQ(m.size(), 5u);
    EXPECT_EQ(m[0].sf, 3u);
    EXPECT_EQ(m[0].csf, 3u);
    EXPECT_EQ(m[0].nf, 0u);
    EXPECT_EQ(m[0].af, 0u);
    EXPECT_EQ(m[0].fs_accuracy, 1.0);
}

TEST(FsMetrics, OneNoiseFeature) {
    const auto m = fs_metrics(FeatureSet{0, 1, 2, 8}, d2_truth(), 28);
    EXPECT_EQ(m[0].sf, 4u);
    EXPECT_EQ(m[0].csf, 3u);
    EXPECT_EQ(m[0].nf, 1u);
    EXPECT_EQ(m[0].af, 0u);
    EXPECT_DOUBLE_EQ(m[0].fs_accuracy, 3.0 / 4.0);
}

TEST(FsMetrics, OtherClassFeatureCountsAsAf) {
    // Feature 4 (one-based) belongs to classes 3 and 5, not class 1.
    const auto m = fs_metrics(FeatureSet{0, 3}, d2_truth(), 28);
    EXPECT_EQ(m[0].csf, 1u);
    EXPECT_EQ(m[0].af, 1u);
    EXPECT_DOUBLE_EQ(m[0].fs_accuracy, 1.0 / 4.0);
}

TEST(FsMetrics, EmptySelection) {
    const auto m = fs_metrics(FeatureSet{}, d2_truth(), 28);
    for (const auto& r : m) {
        EXPECT_EQ(r.sf + r.csf + r.nf + r.af, 0u);
        EXPECT_EQ(r.fs_accuracy, 0.0);
    }
}

TEST(FsMetrics, PartitionHoldsOnRandomSelections) {
    SeededRng rng(3);
    const auto truth = d2_truth();
    for (int t = 0; t < 200; ++t) {
        std::map<int, FeatureSet> sel;
        for (int c = 1; c <= 5; ++c)
            for (std::size_t f = 0; f < 28; ++f)
                if (rng.uniform() < 0.3) sel[c].insert(f);
        for (const auto& m : fs_metrics(sel, truth, 28)) {
            ASSERT_EQ(m.sf, m.csf + m.nf + m.af);
            ASSERT_LE(m.csf, truth.per_class.at(m.class_id).size());
            ASSERT_EQ(m.fs_accuracy == 1.0, m.csf == truth.per_class.at(m.class_id).size() && m.nf + m.af == 0);
        }
    }
}

TEST(FsMetrics, Errors) {
    EXPECT_THROW(fs_metrics(FeatureSet{28}, d2_truth(), 28), std::out_of_range);
    EXPECT_THROW(fs_metrics(std::map<int, FeatureSet>{{1, {0}}}, d2_truth(), 28), DataError);
}

TEST(StratifiedSplit, SeventyThirtyPerClass) {
    SeededRng g(1);
    const auto d = make_preset("d3", g).data;
    SeededRng rng(2);
    const auto s = stratified_split(d, 0.7, rng);
    EXPECT_EQ(s.train.samples() + s.test.samples(), d.samples());
    const auto all = d.class_counts(), tr = s.train.class_counts();
    for (std::size_t c = 0; c < all.size(); ++c) EXPECT_EQ(tr[c], static_cast<std::size_t>(std::lround(0.7 * all[c])));
    SeededRng again(2);
    EXPECT_EQ(stratified_split(d, 0.7, again).train, s.train);
}

TEST(ClassifyEval, SeparableBlobsAreNearlyPerfect) {
    SeededRng g(4);
    const auto d = two_blobs(g, 150);
    SeededRng sr(5);
    const auto s = stratified_split(d, 0.7, sr);
    for (auto c : {Classifier::Som, Classifier::Gsom}) {
        SeededRng rng(6);
        ScopedWarningCapture quiet;
        EXPECT_GE(classify_eval(c, s.train, s.test, all_of(3), quick_classify(), rng), 0.99) << to_string(c);
    }
}

TEST(ClassifyEval, DeterministicAndIdentityFilterIsBitIdentical) {
    SeededRng g(7);
    const auto d = two_blobs(g, 60);
    SeededRng sr(8);
    const auto s = stratified_split(d, 0.7, sr);
    SeededRng a(9), b(9);
    const double x = classify_eval(Classifier::Som, s.train, s.test, all_of(3), quick_classify(), a);
    const std::vector<std::size_t> identity{0, 1, 2};
    const auto pt = s.train.project(identity), pe = s.test.project(identity);
    const double y = classify_eval(Classifier::Som, pt, pe, all_of(3), quick_classify(), b);
    EXPECT_EQ(x, y);
}

TEST(ClassifyEval, EmptySelectionThrows) {
    SeededRng g(7);
    const auto d = two_blobs(g, 10);
    EXPECT_THROW(classify_eval(Classifier::Som, d, d, {}, quick_classify(), g), std::invalid_argument);
}

TEST(RunTrials, ConstantOutcomeHasZeroSpread) {
    const auto s = run_trials("m", "d", [](std::uint64_t) { return 0.8; }, 15, 100);
    EXPECT_EQ(s.values().size(), 15u);
    EXPECT_EQ(s.stddev, 0.0);
    EXPECT_DOUBLE_EQ(s.mean, 0.8);
    std::vector<std::uint64_t> want;
    for (std::uint64_t i = 100; i < 115; ++i) want.push_back(i);
    EXPECT_EQ(s.seeds(), want);
}

TEST(RunTrials, SampleStandardDeviation) {
    const auto s = run_trials("m", "d", [](std::uint64_t seed) { return seed == 0 ? 0.9 : 1.0; }, 2, 0);
    EXPECT_NEAR(s.mean, 0.95, 1e-15);
    EXPECT_NEAR(s.stddev, std::sqrt(0.005), 1e-15);
    const auto [m, sd] = mean_stddev(s.values());
    EXPECT_EQ(m, s.mean);
    EXPECT_EQ(sd, s.stddev);
}

TEST(RunTrials, FailuresAreRecordedAndExcluded) {
    const auto s = run_trials("m", "d",
                              [](std::uint64_t seed) {
                                  if (seed % 3 == 0) throw std::runtime_error("boom");
                                  return static_cast<double>(seed);
                              },
                              6, 0);
    EXPECT_EQ(s.failures, 2u);
    EXPECT_EQ(s.values(), (std::vector<double>{1, 2, 4, 5}));
    EXPECT_EQ(s.trials[0].error, "boom");
    EXPECT_EQ(to_json(s)["failures"], 2);
}

TEST(RunTrials, ParallelJobsKeepSeedOrder) {
    auto task = [](std::uint64_t seed) {
        std::this_thread::sleep_for(std::chrono::milliseconds(seed % 2 ? 5 : 0));
        return static_cast<double>(seed * seed);
    };
    const auto serial = run_trials("m", "d", task, 12, 3, 1);
    const auto parallel = run_trials("m", "d", task, 12, 3, 4);
    EXPECT_EQ(serial.values(), parallel.values());
    EXPECT_EQ(to_json(serial).dump(), to_json(parallel).dump());
}

TEST(Footprint, ReferenceExample) {
    FootprintParams p;
    p.hours = 1;
    const double e = energy_kwh(p);
    const double want = 1.0 * (1 * 12.0 * 1.0 + 4 * 0.3725) * 1.67 * 0.001;
    EXPECT_NEAR(e, want, 1e-9 * want);
    EXPECT_NEAR(e, 0.02253, 5e-6);
    EXPECT_NEAR(carbon_g(e, 475), 10.70, 0.005);
    EXPECT_EQ(display_carbon(carbon_g(e, 475)), "10.70");
}

TEST(Footprint, ZeroAndLinearity) {
    FootprintParams p;
    EXPECT_EQ(energy_kwh(p), 0.0);
    EXPECT_EQ(carbon_g(0.0, 475), 0.0);
    SeededRng rng(10);
    for (int i = 0; i < 100; ++i) {
        p.hours = rng.uniform(0, 10);
        p.cores = rng.uniform(1, 64);
        p.core_usage = rng.uniform();
        p.pue = rng.uniform(1, 2);
        p.carbon_intensity = rng.uniform(0, 900);
        auto q = p;
        q.hours *= 2;
        EXPECT_NEAR(energy_kwh(q), 2 * energy_kwh(p), 1e-12 * energy_kwh(q));
        const double two_step = carbon_g(energy_kwh(p), p.carbon_intensity);
        EXPECT_NEAR(carbon_fused_g(p), two_step, 1e-12 * std::max(1.0, two_step));
    }
}

TEST(Footprint, DisplayRounding) {
    EXPECT_EQ(display_carbon(0.0), "0.0");
    EXPECT_EQ(display_carbon(0.005), "0.0");
    EXPECT_EQ(display_carbon(0.0051), "0.01");
    EXPECT_EQ(display_carbon(3.14159), "3.14");
}

TEST(Footprint, Validation) {
    FootprintParams p;
    p.pue = 0.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.pue = 1.2;
    p.hours = -1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.hours = 1;
    p.core_usage = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.core_usage = 1;
    EXPECT_NO_THROW(p.validate());
}

TEST(Footprint, FromSeconds) {
    const auto r = footprint_for(3600.0);
    EXPECT_DOUBLE_EQ(r.params.hours, 1.0);
    FootprintParams p;
    p.hours = 1.0;
    EXPECT_EQ(r.energy_kwh, energy_kwh(p));
}

TEST(Timed, NoOpIsFast) {
    const auto t = timed([] { return 1; });
    EXPECT_EQ(t.result, 1);
    EXPECT_LT(t.seconds, 1e-3);
    EXPECT_GT(t.peak_memory_bytes, 0u);
}

TEST(ResultsCsv, HeaderAndBlankMetrics) {
    const auto dir = fs::temp_directory_path() / ("fsbench_eval_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    ResultRow a{"d2", "mi", 1, FsClassMetrics{1, 4, 3, 1, 0, 0.75}, 0.9, 0.01, 0.5, 1e-6, 5e-4, 7};
    ResultRow b{"glass", "fscore", 0, std::nullopt, std::nullopt, std::nullopt, 0.25, 0.0, 0.0, 8};
    write_results_csv({a, b}, dir / "all.csv");
    std::ifstream in(dir / "all.csv");
    std::string header, l1, l2;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    EXPECT_EQ(header, "dataset,method,class,SF,CSF,NF,AF,fs_accuracy,clf_accuracy_mean,clf_accuracy_std,runtime_s,"
                      "energy_kwh,co2_g,seed");
    EXPECT_EQ(l1.substr(0, 18), "d2,mi,1,4,3,1,0,0.");
    EXPECT_EQ(l2.substr(0, 25), "glass,fscore,all,,,,,,,,0");
    fs::remove_all(dir);
}
