#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "kinverify/simd/kernels.hpp"

namespace kinverify {

/// Pair label, also used as the verification decision.
enum class Label : std::uint8_t { non_kin = 0, kin = 1 };

struct Threshold {
    enum class Source { accuracy_max, fixed };
    double value = 0.0;
    Source source = Source::fixed;
    double training_accuracy = 0.0;  // fraction, filled for accuracy_max
};

/// Cosine of the angle between z1 and z2, clamped to [-1, 1].
double cosine_score(std::span<const double> z1, std::span<const double> z2);
double cosine_score(std::span<const double> z1, std::span<const double> z2,
                    const simd::Kernels& kernels);
inline double cosine_score(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2) {
    return cosine_score(std::span<const double>(z1.data(), std::size_t(z1.size())),
                        std::span<const double>(z2.data(), std::size_t(z2.size())));
}

/// Scans the midpoints between adjacent distinct sorted scores and keeps the
/// one with the best training accuracy; ties go to the larger threshold.
Threshold choose_threshold(std::span<const double> scores, std::span<const Label> labels);

/// kin iff score >= threshold
inline Label decide(double score, const Threshold& t) {
    return score >= t.value ? Label::kin : Label::non_kin;
}

/// Weighted arithmetic mean; uniform when no weights are given.
double fuse_scores(std::span<const double> scores,
                   std::optional<std::span<const double>> weights = std::nullopt);

}  // namespace kinverify
