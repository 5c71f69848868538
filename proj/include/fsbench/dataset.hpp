#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsbench {

/// Raised for malformed input files and violated dataset invariants.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Zero-based feature indices. Files and reports use one-based indices.
using FeatureSet = std::set<std::size_t>;

/// Dense row-major matrix of samples x features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct ColumnRange {
    double min = 0.0;
    double max = 0.0;
    friend bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

/// Immutable labelled sample matrix.
///
/// Labels are contiguous class ids 1..K; `class_names()[k-1]` keeps the label
/// text as it appeared in the source so reports can show original values.
class Dataset {
public:
    Dataset() = default;

    /// Throws DataError if the label vector does not match the row count,
    /// a label lies outside 1..K, or some class in 1..K has no samples.
    Dataset(Matrix features, std::vector<int> labels, std::vector<std::string> feature_names = {},
            std::vector<std::string> class_names = {});

    std::size_t samples() const { return features_.rows(); }
    std::size_t features() const { return features_.cols(); }
    int num_classes() const { return num_classes_; }

    const Matrix& matrix() const { return features_; }
    std::span<const double> row(std::size_t i) const { return features_.row(i); }
    double at(std::size_t i, std::size_t f) const { return features_(i, f); }
    int label(std::size_t i) const { return labels_[i]; }
    const std::vector<int>& labels() const { return labels_; }

    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::vector<std::string>& class_names() const { return class_names_; }

    bool normalized() const { return normalized_; }
    /// Source ranges retained by normalize_min_max (empty otherwise).
    const std::vector<ColumnRange>& source_ranges() const { return source_ranges_; }

    std::vector<std::size_t> class_counts() const;
    std::vector<std::size_t> rows_of_class(int class_id) const;

    /// Rows in the given order, class ids re-densified if classes disappear.
    Dataset subset(std::span<const std::size_t> rows) const;
    /// Column projection in the given order.
    Dataset project(std::span<const std::size_t> columns) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    friend Dataset normalize_min_max(const Dataset& d);
    friend Dataset normalize_with(const Dataset& d, std::span<const ColumnRange> ranges);

    Matrix features_;
    std::vector<int> labels_;
    std::vector<std::string> feature_names_;
    std::vector<std::string> class_names_;
    int num_classes_ = 0;
    bool normalized_ = false;
    std::vector<ColumnRange> source_ranges_;
};

/// Reads a header-led, comma-separated file. `label_column` is a header name
/// or "last". Integer labels are ranked ascending onto 1..K; any non-integer
/// label switches to first-appearance order over the label strings.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column = "last");

/// Writes features with 17 significant digits followed by the label column
/// (original class names), so load_csv reproduces the values bit-exactly.
void save_csv(const Dataset& d, const std::filesystem::path& path, const std::string& label_name = "class");

/// Maps each column onto [0,1] by (x - min) / (max - min). Constant columns
/// become 0. The source ranges are kept on the result.
Dataset normalize_min_max(const Dataset& d);

/// Applies previously measured ranges (e.g. from a training split), clamping
/// values that fall outside them into [0,1].
Dataset normalize_with(const Dataset& d, std::span<const ColumnRange> ranges);

/// Per-feature mean of the class's samples, optionally restricted to `rows`.
/// Throws DataError on an empty selection or a row of another class.
std::vector<double> class_mean(const Dataset& d, int class_id,
                               std::optional<std::span<const std::size_t>> rows = std::nullopt);

/// Ground-truth relevant features per class.
struct RelevanceTruth {
    std::map<int, FeatureSet> per_class;

    /// Features relevant to no class.
    FeatureSet noise_features(std::size_t feature_count) const;
    /// Throws DataError when an index is out of range or a class is missing.
    void validate(const Dataset& d) const;

    friend bool operator==(const RelevanceTruth&, const RelevanceTruth&) = default;
};

RelevanceTruth load_truth(const std::filesystem::path& path);
void save_truth(const RelevanceTruth& truth, const std::filesystem::path& path);

}  // namespace fsbench
