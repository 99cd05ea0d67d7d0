#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kinverify/imaging.hpp"
#include "kinverify/scoring.hpp"

namespace kinverify {

inline constexpr int kFoldCount = 5;

enum class Relation { father_son = 0, father_daughter = 1, mother_son = 2, mother_daughter = 3 };
inline constexpr std::array<Relation, 4> kRelations{
    Relation::father_son, Relation::father_daughter, Relation::mother_son,
    Relation::mother_daughter};

/// Cornell KinFace relation shares (%), in kRelations order.
inline constexpr std::array<double, 4> kCornellRelationShare{40.0, 22.0, 13.0, 25.0};

std::string_view to_string(Relation r) noexcept;
/// Accepts "father-son", "father_son", "fs", "F-S" and so on.
Relation parse_relation(std::string_view text);
std::string_view to_string(Label l) noexcept;
Label parse_label(std::string_view text);

/// One parent/child pair. `fold` is 1..5, or 0 while unassigned.
struct PairRecord {
    Relation relation = Relation::father_son;
    std::filesystem::path parent;
    std::filesystem::path child;
    Label label = Label::kin;
    int fold = 0;
    std::optional<CropWindow> parent_crop;
    std::optional<CropWindow> child_crop;

    friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

/// Reads `relation,parent,child,label,fold[,crop_x,crop_y,crop_side]`.
/// Image paths are resolved against the manifest's directory and must
/// exist. An empty fold column means "assign folds later"; a row's crop
/// applies to both of its images.
std::vector<PairRecord> load_manifest(const std::filesystem::path& path);

/// Writes a manifest with image paths relative to the manifest's directory.
void write_manifest(const std::filesystem::path& path, std::span<const PairRecord> records);

struct RelationShare {
    Relation relation;
    std::size_t count = 0;
    double percent = 0.0;
    double reference_percent = 0.0;
};
/// Share of each relation among kin pairs next to the Cornell KinFace shares.
std::vector<RelationShare> relation_distribution(std::span<const PairRecord> records);

/// Seeded fold assignment stratified by relation for records whose fold is
/// 0. Mixing assigned and unassigned rows is an error.
void assign_folds(std::vector<PairRecord>& records, std::uint64_t seed);

/// One non-kin pair per kin pair: within each (relation, fold) cell the
/// children are permuted by a seeded derangement, so no parent keeps its own
/// child.
std::vector<PairRecord> generate_negatives(std::span<const PairRecord> positives,
                                           std::uint64_t seed);

/// Permutes labels within each fold (keeps every fold balanced).
std::vector<PairRecord> shuffle_labels(std::span<const PairRecord> records, std::uint64_t seed);

struct RocPoint {
    double false_accept = 0.0;  // fraction of non-kin pairs accepted
    double true_accept = 0.0;   // fraction of kin pairs accepted
};

struct Metrics {
    double accuracy = 0.0;                         // %
    std::map<Relation, double> relation_accuracy;  // %
    std::vector<RocPoint> roc;                     // from (0,0) to (1,1)
    double eer = 0.0;                              // %
};

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels);

/// FAR = FRR crossing, linearly interpolated between adjacent ROC points. %.
double equal_error_rate(std::span<const RocPoint> roc);

Metrics compute_metrics(std::span<const double> scores, std::span<const Label> labels,
                        std::span<const Relation> relations, const Threshold& threshold);

}  // namespace kinverify
