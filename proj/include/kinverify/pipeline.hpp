#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kinverify/bsif.hpp"
#include "kinverify/features.hpp"
#include "kinverify/protocol.hpp"
#include "kinverify/scoring.hpp"
#include "kinverify/subspace.hpp"

namespace kinverify {

enum class Fusion { feature, score };
enum class FilterLearning { per_fold, all_data, precomputed };

std::string_view to_string(Fusion f) noexcept;
Fusion parse_fusion(std::string_view text);
std::string_view to_string(FilterLearning f) noexcept;
FilterLearning parse_filter_learning(std::string_view text);

struct Seeds {
    std::uint64_t patch = 42;
    std::uint64_t ica = 42;
    std::uint64_t negatives = 1;
    std::uint64_t folds = 2;
    std::uint64_t fit = 3;
    std::uint64_t shuffle = 4;
};

struct PipelineConfig {
    std::vector<int> lbp_radii{1, 2, 3};
    int lbp_neighbors = 8;
    std::vector<int> bsif_sizes{3, 7, 11, 15, 17};
    int bits = 8;
    std::size_t patches = 50000;
    GridSpec grid{};
    int pca_cap = 200;
    int m1 = 40;
    int m2 = 8;
    int sweeps = 2;
    Fusion fusion = Fusion::feature;
    FilterLearning filter_learning = FilterLearning::per_fold;
    std::vector<FilterBank> banks;  // used with FilterLearning::precomputed
    Seeds seeds{};
    bool shuffle_labels = false;
    IcaOptions ica{};
    int jobs = 1;
};

/// Table-row label, e.g. "Color MS-BSIF Learning".
std::string method_name(const PipelineConfig& config);

/// Which images a training stage of one fold touched.
struct AuditEntry {
    int fold = 0;
    std::string stage;  // patch-sampling, filter-learning, pca, txqda, threshold
    std::vector<std::string> image_ids;
    std::string note;
};

struct FoldResult {
    int fold = 0;
    std::size_t train_pairs = 0;
    std::size_t dropped_train_pairs = 0;  // shared an image with the test fold
    Threshold threshold{};
    Metrics metrics;
    std::vector<double> scores;
    std::vector<Label> labels;
    std::vector<Relation> relations;
    std::vector<ModeFitRecord> fit_history;  // all TXQDA fits of the fold, in order
    std::map<int, std::array<IcaStats, 3>> ica;  // per BSIF side
};

struct CvResult {
    std::vector<PairRecord> pairs;  // after fold assignment, negatives, shuffling
    std::vector<RelationShare> distribution;
    std::vector<FoldResult> folds;
    double mean_accuracy = 0.0;                    // mean over folds, %
    std::map<Relation, double> relation_accuracy;  // mean over folds holding the relation, %
    std::vector<RocPoint> roc;                     // pooled test scores
    double eer = 0.0;
    std::map<std::string, std::string> image_ids;  // id -> path (+crop)
    std::map<int, std::vector<std::string>> test_ids;
    std::vector<AuditEntry> audit;
};

/// Histogram columns of one preprocessed image, channel-major; within a
/// channel BSIF sides ascending, then LBP radii ascending. `banks` need not be
/// sorted.
std::vector<Eigen::VectorXd> feature_columns(const ColorImage& img,
                                             std::span<const FilterBank> banks,
                                             const PipelineConfig& config);
FeatureTensor image_features(const ColorImage& img, std::span<const FilterBank> banks,
                             const PipelineConfig& config);

/// Assigns folds when absent, generates one negative per kin pair when the
/// list holds no non-kin pairs, and optionally shuffles labels within folds.
std::vector<PairRecord> expand_pairs(std::span<const PairRecord> records,
                                     const PipelineConfig& config);

using ProgressFn = std::function<void(std::string_view)>;

/// Five-fold cross-validation. For every fold, filters, PCA, projections and
/// threshold are fitted on training pairs only; training pairs that share an
/// image with the test fold are dropped.
CvResult run_cross_validation(std::span<const PairRecord> records, const PipelineConfig& config,
                              const ProgressFn& progress = {});

/// Audit violations: training-stage entries that name a test-fold image.
std::vector<std::string> find_leaks(const CvResult& result);

/// Content id of an image as used in audit logs: FNV-1a of the file bytes
/// and the crop window.
std::string image_id(std::string_view file_bytes, const std::optional<CropWindow>& crop);

}  // namespace kinverify
