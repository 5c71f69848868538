#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include <unistd.h>

#include "fsbench/dataset.hpp"
#include "fsbench/diagnostics.hpp"
#include "fsbench/rng.hpp"
#include "fsbench/synth.hpp"

using namespace fsbench;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("fsbench_ds_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

Dataset column(const std::vector<double>& v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    std::vector<int> labels(v.size(), 1);
    return Dataset(std::move(m), labels);
}

}  // namespace

TEST(SeededRng, SameSeedSameStream) {
    SeededRng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        ASSERT_EQ(a.next(), b.next());
    }
}

TEST(SeededRng, KnownFirstDraws) {
    // Reference values from the published splitmix64 / xoshiro256** code.
    std::uint64_t sm = 0;
    auto splitmix = [&sm] {
        std::uint64_t z = (sm += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    };
    EXPECT_EQ(splitmix(), 0xE220A8397B1DCDAFULL);
    std::uint64_t s[4];
    sm = 0;
    for (auto& w : s) w = splitmix();
    const std::uint64_t expected = ((s[1] * 5) << 7 | (s[1] * 5) >> 57) * 9;
    SeededRng r(0);
    EXPECT_EQ(r.next(), expected);
}

TEST(SeededRng, UniformStaysInRange) {
    SeededRng r(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_LT(r.below(7), 7u);
    }
}

TEST(SeededRng, NormalMomentsRoughlyStandard) {
    SeededRng r(9);
    double s = 0, ss = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        s += z;
        ss += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(ss / n, 1.0, 0.02);
}

TEST(SeededRng, DerivedStreamsDiffer) {
    SeededRng r(5);
    auto a = r.derive(0), b = r.derive(1), c = r.derive(0);
    EXPECT_NE(a.next(), b.next());
    EXPECT_EQ(r.derive(0).next(), c.next());
}

TEST(Dataset, RejectsBadLabels) {
    EXPECT_THROW(Dataset(Matrix(2, 1), {1}), DataError);
    EXPECT_THROW(Dataset(Matrix(2, 1), {0, 1}), DataError);
    EXPECT_THROW(Dataset(Matrix(2, 1), {1, 3}), DataError);
}

TEST(LoadCsv, ThreeRowFile) {
    TempDir t;
    const auto p = write_file(t.path() / "a.csv", "a,b,class\n0,1,1\n1,0,2\n1,1,2\n");
    const auto d = load_csv(p);
    EXPECT_EQ(d.samples(), 3u);
    EXPECT_EQ(d.features(), 2u);
    EXPECT_EQ(d.labels(), (std::vector<int>{1, 2, 2}));
    EXPECT_FALSE(d.normalized());
    EXPECT_EQ(d.feature_names(), (std::vector<std::string>{"a", "b"}));
}

TEST(LoadCsv, StringLabelsInFirstAppearanceOrder) {
    TempDir t;
    const auto p = write_file(t.path() / "s.csv", "x,y\n1,beta\n2,alpha\n3,beta\n");
    const auto d = load_csv(p);
    EXPECT_EQ(d.labels(), (std::vector<int>{1, 2, 1}));
    EXPECT_EQ(d.class_names(), (std::vector<std::string>{"beta", "alpha"}));
}

TEST(LoadCsv, NamedLabelColumn) {
    TempDir t;
    const auto p = write_file(t.path() / "n.csv", "cls,x,y\n2,0.5,1\n1,0.25,2\n");
    const auto d = load_csv(p, "cls");
    EXPECT_EQ(d.features(), 2u);
    EXPECT_EQ(d.labels(), (std::vector<int>{2, 1}));
    EXPECT_DOUBLE_EQ(d.at(1, 0), 0.25);
}

TEST(LoadCsv, NonNumericCellNamesTheCell) {
    TempDir t;
    const auto p = write_file(t.path() / "bad.csv", "a,b,class\n0,1,1\n1,oops,2\n");
    try {
        load_csv(p);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
    }
}

TEST(LoadCsv, StructuralErrors) {
    TempDir t;
    EXPECT_THROW(load_csv(write_file(t.path() / "e.csv", "")), DataError);
    EXPECT_THROW(load_csv(write_file(t.path() / "r.csv", "a,b,class\n0,1\n")), DataError);
    EXPECT_THROW(load_csv(t.path() / "missing.csv"), DataError);
}

TEST(LoadCsv, SingleClassWarnsButLoads) {
    TempDir t;
    ScopedWarningCapture cap;
    const auto d = load_csv(write_file(t.path() / "one.csv", "a,class\n1,7\n2,7\n"));
    EXPECT_EQ(d.num_classes(), 1);
    EXPECT_EQ(cap.messages().size(), 1u);
}

TEST(SaveCsv, RoundTripIsBitExact) {
    TempDir t;
    SeededRng rng(11);
    const auto d = make_preset("d3", rng).data;
    save_csv(d, t.path() / "d3.csv");
    const auto back = load_csv(t.path() / "d3.csv");
    EXPECT_EQ(back.matrix(), d.matrix());
    EXPECT_EQ(back.labels(), d.labels());
}

TEST(Normalize, AffineMap) {
    const auto n = normalize_min_max(column({2, 4, 6}));
    EXPECT_EQ(n.at(0, 0), 0.0);
    EXPECT_EQ(n.at(1, 0), 0.5);
    EXPECT_EQ(n.at(2, 0), 1.0);
    EXPECT_TRUE(n.normalized());
    ASSERT_EQ(n.source_ranges().size(), 1u);
    EXPECT_EQ(n.source_ranges()[0], (ColumnRange{2, 6}));
}

TEST(Normalize, ConstantColumnIsZero) {
    const auto n = normalize_min_max(column({5, 5, 5}));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(n.at(i, 0), 0.0);
}

TEST(Normalize, IdempotentAndOrderPreserving) {
    SeededRng rng(2);
    const auto d = make_preset("d3", rng).data;
    const auto once = normalize_min_max(d);
    const auto twice = normalize_min_max(once);
    EXPECT_EQ(once.matrix(), twice.matrix());
    for (std::size_t f = 0; f < d.features(); ++f) {
        for (std::size_t i = 1; i < d.samples(); ++i) {
            if (d.at(i, f) < d.at(i - 1, f)) {
                ASSERT_LE(once.at(i, f), once.at(i - 1, f));
            } else if (d.at(i, f) > d.at(i - 1, f)) {
                ASSERT_GE(once.at(i, f), once.at(i - 1, f));
            }
        }
    }
}

TEST(Normalize, WithRangesClampsOutside) {
    const auto n = normalize_with(column({-1, 0.5, 3}), std::vector<ColumnRange>{{0, 1}});
    EXPECT_EQ(n.at(0, 0), 0.0);
    EXPECT_EQ(n.at(1, 0), 0.5);
    EXPECT_EQ(n.at(2, 0), 1.0);
}

TEST(ClassMean, Midpoint) {
    Matrix m(2, 2);
    m(0, 0) = 0;
    m(0, 1) = 0;
    m(1, 0) = 2;
    m(1, 1) = 2;
    const Dataset d(std::move(m), {1, 1});
    EXPECT_EQ(class_mean(d, 1), (std::vector<double>{1, 1}));
    const std::vector<std::size_t> one{1};
    EXPECT_EQ(class_mean(d, 1, one), (std::vector<double>{2, 2}));
}

TEST(ClassMean, ErrorsOnEmptyOrForeignRows) {
    const Dataset d(Matrix(2, 1), {1, 2});
    const std::vector<std::size_t> none, other{1};
    EXPECT_THROW(class_mean(d, 1, none), DataError);
    EXPECT_THROW(class_mean(d, 1, other), DataError);
}

TEST(ClassMean, D3ClassOneMatchesStreamingSum) {
    SeededRng rng(7);
    const auto d = make_preset("d3", rng).data;
    const auto mean = class_mean(d, 1);
    // Kahan-compensated running sums as the independent reference.
    for (std::size_t f = 0; f < d.features(); ++f) {
        double s = 0.0, c = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < d.samples(); ++i) {
            if (d.label(i) != 1) continue;
            const double y = d.at(i, f) - c;
            const double t = s + y;
            c = (t - s) - y;
            s = t;
            ++n;
        }
        EXPECT_NEAR(mean[f], s / n, 1e-12);
    }
}

TEST(ClassMean, WholeMeanIsCountWeightedClassMeans) {
    SeededRng rng(4);
    const auto d = make_preset("d2", rng).data;
    const auto counts = d.class_counts();
    for (std::size_t f = 0; f < d.features(); ++f) {
        double total = 0.0, weighted = 0.0;
        for (std::size_t i = 0; i < d.samples(); ++i) total += d.at(i, f);
        for (int k = 1; k <= d.num_classes(); ++k) weighted += class_mean(d, k)[f] * counts[k - 1];
        EXPECT_NEAR(total / d.samples(), weighted / d.samples(), 1e-9);
    }
}

TEST(Dataset, SubsetAndProject) {
    SeededRng rng(1);
    const auto d = make_preset("d3", rng).data;
    const std::vector<std::size_t> cols{2, 0};
    const auto p = d.project(cols);
    EXPECT_EQ(p.features(), 2u);
    EXPECT_EQ(p.at(5, 0), d.at(5, 2));
    EXPECT_EQ(p.at(5, 1), d.at(5, 0));
    const auto rows = d.rows_of_class(3);
    const auto s = d.subset(rows);
    EXPECT_EQ(s.num_classes(), 1);
    EXPECT_EQ(s.samples(), rows.size());
}

TEST(Truth, RoundTripAndValidation) {
    TempDir t;
    RelevanceTruth truth;
    truth.per_class = {{1, {0, 1, 2}}, {2, {3}}};
    save_truth(truth, t.path() / "t.json");
    EXPECT_EQ(load_truth(t.path() / "t.json"), truth);
    EXPECT_EQ(truth.noise_features(6), (FeatureSet{4, 5}));
    const Dataset d(Matrix(2, 4), {1, 2});
    EXPECT_NO_THROW(truth.validate(d));
    const Dataset narrow(Matrix(2, 3), {1, 2});
    EXPECT_THROW(truth.validate(narrow), DataError);
    const Dataset three(Matrix(3, 4), {1, 2, 3});
    EXPECT_THROW(truth.validate(three), DataError);
}

TEST(Truth, FileUsesOneBasedIndices) {
    TempDir t;
    const auto p = write_file(t.path() / "t.json", R"({"classes": {"1": [1, 2, 3]}})");
    EXPECT_EQ(load_truth(p).per_class.at(1), (FeatureSet{0, 1, 2}));
    const auto bad = write_file(t.path() / "b.json", R"({"classes": {"1": [0]}})");
    EXPECT_THROW(load_truth(bad), DataError);
}
