#include "kinverify/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "kinverify/error.hpp"

namespace kinverify {

double cosine_score(std::span<const double> z1, std::span<const double> z2) {
    return cosine_score(z1, z2, simd::kernels());
}

double cosine_score(std::span<const double> z1, std::span<const double> z2,
                    const simd::Kernels& kernels) {
    require(z1.size() == z2.size(), ErrorCode::invalid_argument,
            "score vectors differ in length (" + std::to_string(z1.size()) + " vs " +
                std::to_string(z2.size()) + ")");
    const double n1 = kernels.dot(z1.data(), z1.data(), z1.size());
    const double n2 = kernels.dot(z2.data(), z2.data(), z2.size());
    require(n1 > 0.0 && n2 > 0.0, ErrorCode::degenerate_input, "cosine of a zero vector");
    const double c = kernels.dot(z1.data(), z2.data(), z1.size()) / (std::sqrt(n1) * std::sqrt(n2));
    require(std::isfinite(c), ErrorCode::degenerate_input, "non-finite cosine score");
    return std::clamp(c, -1.0, 1.0);
}

Threshold choose_threshold(std::span<const double> scores, std::span<const Label> labels) {
    require(scores.size() == labels.size(), ErrorCode::invalid_argument,
            "scores and labels differ in length");
    const auto positives = std::count(labels.begin(), labels.end(), Label::kin);
    require(positives > 0 && positives < std::ptrdiff_t(labels.size()), ErrorCode::degenerate_input,
            "threshold selection needs both kin and non-kin samples");

    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<double> candidates;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    if (candidates.empty()) candidates.push_back(sorted.front());

    Threshold best{candidates.front(), Threshold::Source::accuracy_max, -1.0};
    for (double t : candidates) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            correct += decide(scores[i], {t}) == labels[i] ? 1 : 0;
        const double acc = double(correct) / double(scores.size());
        if (acc >= best.training_accuracy) best = {t, Threshold::Source::accuracy_max, acc};
    }
    return best;
}

double fuse_scores(std::span<const double> scores, std::optional<std::span<const double>> weights) {
    require(!scores.empty(), ErrorCode::invalid_argument, "no scores to fuse");
    if (!weights) return std::accumulate(scores.begin(), scores.end(), 0.0) / double(scores.size());
    require(weights->size() == scores.size(), ErrorCode::invalid_argument,
            "weights and scores differ in length");
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        require((*weights)[i] >= 0.0, ErrorCode::invalid_argument, "negative fusion weight");
        wsum += (*weights)[i];
        acc += (*weights)[i] * scores[i];
    }
    require(wsum > 0.0, ErrorCode::invalid_argument, "fusion weights sum to zero");
    return acc / wsum;
}

}  // namespace kinverify
