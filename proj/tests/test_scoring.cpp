#include <doctest.h>

#include <vector>

#include "kinverify/scoring.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kinverify;

TEST_CASE("cosine score of parallel, opposite and orthogonal vectors") {
    const Eigen::VectorXd a = Eigen::Vector3d(1, 2, 3);
    CHECK(cosine_score(a, a * 4.0) == doctest::Approx(1.0));
    CHECK(cosine_score(a, -a) == doctest::Approx(-1.0));
    CHECK(cosine_score(Eigen::VectorXd(Eigen::Vector2d(1, 0)), Eigen::VectorXd(Eigen::Vector2d(0, 5))) == 0.0);
    CHECK(cosine_score(Eigen::VectorXd(Eigen::Vector2d(1, 1)), Eigen::VectorXd(Eigen::Vector2d(1, 0))) ==
          doctest::Approx(std::sqrt(0.5)));
    CHECK(cosine_score(a, a) <= 1.0);
}

TEST_CASE("cosine score errors") {
    const Eigen::VectorXd a = Eigen::Vector3d(1, 2, 3);
    CHECK(support::error_of([&] { cosine_score(a, Eigen::VectorXd::Zero(3)); }) ==
          ErrorCode::degenerate_input);
    CHECK(support::error_of([&] { cosine_score(a, Eigen::VectorXd::Ones(2)); }) ==
          ErrorCode::invalid_argument);
}

TEST_CASE("chosen threshold reaches the best midpoint accuracy") {
    Rng rng(61);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(30);
        std::vector<double> scores(n);
        std::vector<Label> labels(n);
        std::vector<bool> kin(n);
        for (std::size_t i = 0; i < n; ++i) {
            // coarse grid so ties are common
            scores[i] = double(rng.below(7)) / 6.0;
            kin[i] = rng.below(2) == 1;
            labels[i] = kin[i] ? Label::kin : Label::non_kin;
        }
        kin[0] = true;
        labels[0] = Label::kin;
        kin[1] = false;
        labels[1] = Label::non_kin;
        const Threshold t = choose_threshold(scores, labels);
        CHECK(t.source == Threshold::Source::accuracy_max);
        std::size_t ok = 0;
        for (std::size_t i = 0; i < n; ++i) ok += decide(scores[i], t) == labels[i] ? 1 : 0;
        CHECK(t.training_accuracy == doctest::Approx(double(ok) / double(n)));
        CHECK(t.training_accuracy == doctest::Approx(oracle::best_accuracy(scores, kin)));
    }
}

TEST_CASE("threshold ties go to the larger candidate") {
    // thresholds 0.15 and 0.25 both give 3/4 correct; the larger wins
    const std::vector<double> scores{0.1, 0.2, 0.3, 0.4};
    const std::vector<Label> labels{Label::non_kin, Label::kin, Label::non_kin, Label::kin};
    const Threshold t = choose_threshold(scores, labels);
    CHECK(t.value == doctest::Approx(0.35));
    CHECK(t.training_accuracy == doctest::Approx(0.75));

    const std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
    const std::vector<Label> sep_labels{Label::non_kin, Label::non_kin, Label::kin, Label::kin};
    CHECK(choose_threshold(sep, sep_labels).value == doctest::Approx(0.5));
}

TEST_CASE("decision is inclusive at the threshold") {
    const Threshold t{0.5};
    CHECK(decide(0.5, t) == Label::kin);
    CHECK(decide(std::nextafter(0.5, 0.0), t) == Label::non_kin);
}

TEST_CASE("threshold selection needs both classes") {
    const std::vector<double> scores{0.1, 0.2};
    const std::vector<Label> kin{Label::kin, Label::kin};
    CHECK(support::error_of([&] { choose_threshold(scores, kin); }) == ErrorCode::degenerate_input);
    const std::vector<Label> one{Label::kin};
    CHECK(support::error_of([&] { choose_threshold(scores, one); }) == ErrorCode::invalid_argument);
}

TEST_CASE("score fusion is a weighted mean") {
    const std::vector<double> s{0.2, 0.4, 0.9};
    CHECK(fuse_scores(s) == doctest::Approx(0.5));
    const std::vector<double> w{1.0, 0.0, 3.0};
    CHECK(fuse_scores(s, std::span<const double>(w)) == doctest::Approx((0.2 + 2.7) / 4.0));
    const std::vector<double> neg{1.0, -1.0, 1.0};
    CHECK(support::error_of([&] { fuse_scores(s, std::span<const double>(neg)); }) ==
          ErrorCode::invalid_argument);
    const std::vector<double> zero(3, 0.0);
    CHECK(support::error_of([&] { fuse_scores(s, std::span<const double>(zero)); }) ==
          ErrorCode::invalid_argument);
    CHECK(support::error_of([&] { fuse_scores({}); }) == ErrorCode::invalid_argument);
}
