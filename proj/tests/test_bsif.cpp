#include <doctest.h>

#include <cmath>

#include "kinverify/bsif.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kinverify;

namespace {

FilterMatrix random_filters(Rng& rng, int n, int side) {
    FilterMatrix f(n, side * side);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
    return f;
}

std::vector<ColorImage> noise_images(Rng& rng, int count) {
    std::vector<ColorImage> out;
    for (int k = 0; k < count; ++k) {
        ColorImage img(32, 32, 1.0);
        for (auto& p : img.planes) p = oracle::random_plane(rng, 32, 32);
        out.push_back(std::move(img));
    }
    return out;
}

// Patches s * v + noise with a heavy-tailed s along a fixed zero-mean unit v.
PatchSet planted(Rng& rng, int side, std::size_t count, Eigen::VectorXd& v) {
    const Eigen::Index d = Eigen::Index(side) * side;
    v = Eigen::VectorXd(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    v.array() -= v.mean();
    v.normalize();
    PatchSet ps{side, Channel::red, Eigen::MatrixXd(d, Eigen::Index(count))};
    for (Eigen::Index j = 0; j < ps.samples.cols(); ++j) {
        const double u = rng.uniform() - 0.5;
        const double s = (u < 0 ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::abs(u)) * 4.0;
        for (Eigen::Index i = 0; i < d; ++i) ps.samples(i, j) = s * v(i) + 0.1 * rng.normal();
    }
    return ps;
}

}  // namespace

TEST_CASE("encoder matches the naive correlation oracle") {
    Rng rng(11);
    for (int side : {1, 3, 5, 9, 17})
        for (int n : {1, 4, 8, 12}) {
            const FilterMatrix f = random_filters(rng, n, side);
            for (int trial = 0; trial < 3; ++trial) {
                const Plane p = oracle::random_plane(rng, side + int(rng.below(20)),
                                                     side + int(rng.below(20)));
                REQUIRE(bsif_encode(p, f, side) == oracle::bsif(p, f, side));
            }
        }
}

TEST_CASE("zero plane gives code 0 and one filter gives binary codes") {
    Rng rng(2);
    const Plane zero(16, 16, 0.0);
    for (auto c : bsif_encode(zero, random_filters(rng, 8, 3), 3).codes) REQUIRE(c == 0u);
    const Plane p = oracle::random_plane(rng, 16, 16);
    const CodeMap m = bsif_encode(p, random_filters(rng, 1, 7), 7);
    CHECK(m.code_bits == 1);
    CHECK(m.width == 16);
    CHECK(m.height == 16);
    for (auto c : m.codes) REQUIRE(c <= 1u);
}

TEST_CASE("planes smaller than the filter are rejected") {
    Rng rng(3);
    const Plane p = oracle::random_plane(rng, 8, 9);
    CHECK(support::error_of([&] { bsif_encode(p, random_filters(rng, 2, 9), 9); }) ==
          ErrorCode::invalid_argument);
    CHECK(bsif_encode(oracle::random_plane(rng, 9, 9), random_filters(rng, 2, 9), 9).width == 9);
}

TEST_CASE("sampled patches are normalized, seeded and sized") {
    Rng rng(5);
    const auto images = noise_images(rng, 3);
    const PatchSet a = sample_channel_patches(images, 5, 500, 42, Channel::green);
    const PatchSet b = sample_channel_patches(images, 5, 500, 42, Channel::green);
    const PatchSet c = sample_channel_patches(images, 5, 500, 43, Channel::green);
    REQUIRE(a.samples.rows() == 25);
    REQUIRE(a.count() == 500);
    CHECK(identical(a.samples, b.samples));
    CHECK_FALSE(identical(a.samples, c.samples));
    for (Eigen::Index j = 0; j < a.count(); ++j) {
        const auto col = a.samples.col(j);
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().mean());
        REQUIRE(std::abs(mean) < 1e-6);
        REQUIRE(std::abs(sd - 1.0) < 1e-6);
    }
    const auto all = sample_patches(images, 5, 10, 42);
    CHECK(all[1].channel == Channel::green);
    CHECK(identical(all[1].samples, sample_channel_patches(images, 5, 10, 42, Channel::green).samples));
}

TEST_CASE("constant images cannot supply patches") {
    std::vector<ColorImage> flat(2, ColorImage(16, 16, 1.0));
    CHECK(support::error_of([&] { sample_channel_patches(flat, 3, 10, 1, Channel::red); }) ==
          ErrorCode::degenerate_input);
}

TEST_CASE("a planted direction is recovered by a single filter") {
    for (std::uint64_t seed : {1, 2, 3}) {
        Rng rng(seed);
        Eigen::VectorXd v;
        const PatchSet ps = planted(rng, 5, 2000, v);
        const LearnedFilters lf = learn_filters(ps, 1, seed);
        const Eigen::VectorXd f = lf.filters.row(0).transpose();
        CHECK(std::abs(f.dot(v)) >= 0.99);
    }
}

TEST_CASE("learned filters are orthonormal in whitened space, unit, sign-canonical and seeded") {
    Rng rng(7);
    const auto images = noise_images(rng, 4);
    const PatchSet ps = sample_channel_patches(images, 3, 2000, 9, Channel::red);
    const LearnedFilters a = learn_filters(ps, 8, 3);
    const LearnedFilters b = learn_filters(ps, 8, 3);
    CHECK(identical(a.filters, b.filters));
    CHECK(a.stats.orthonormality_error <= 1e-6);
    const Eigen::MatrixXd uut = a.unmixing * a.unmixing.transpose();
    CHECK((uut - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-6);
    for (Eigen::Index i = 0; i < a.filters.rows(); ++i) {
        CHECK(a.filters.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
        Eigen::Index arg = 0;
        a.filters.row(i).cwiseAbs().maxCoeff(&arg);
        CHECK(a.filters(i, arg) > 0.0);
    }
    for (Eigen::Index i = 1; i < a.eigenvalues.size(); ++i)
        CHECK(a.eigenvalues(i) <= a.eigenvalues(i - 1));
    CHECK(a.stats.iterations >= 1);
    CHECK(a.stats.final_delta < 1e-5);
}

TEST_CASE("learn_filters preconditions") {
    Rng rng(7);
    const auto images = noise_images(rng, 2);
    const PatchSet ps = sample_channel_patches(images, 3, 200, 1, Channel::red);
    CHECK(support::error_of([&] { learn_filters(ps, 9, 1); }) == ErrorCode::rank_deficient);
    CHECK(support::error_of([&] { learn_filters(ps, 0, 1); }) == ErrorCode::invalid_argument);
    const PatchSet few = sample_channel_patches(images, 3, 50, 1, Channel::red);
    CHECK(support::error_of([&] { learn_filters(few, 4, 1); }) == ErrorCode::invalid_argument);
}

TEST_CASE("the iteration cap surfaces as not-converged") {
    Rng rng(7);
    const auto images = noise_images(rng, 2);
    const PatchSet ps = sample_channel_patches(images, 3, 500, 1, Channel::red);
    CHECK(support::error_of([&] { learn_filters(ps, 6, 1, {1e-30, 3}); }) ==
          ErrorCode::not_converged);
}

TEST_CASE("bank learning records its provenance and encodes channel-major") {
    Rng rng(12);
    const auto images = noise_images(rng, 3);
    const BankLearning a = learn_filter_bank(images, 3, 4, 400, 17, 18, "unit");
    const BankLearning b = learn_filter_bank(images, 3, 4, 400, 17, 18, "unit");
    CHECK(a.bank == b.bank);
    CHECK(a.bank.seed == 17);
    CHECK(a.bank.source_tag == "unit");
    CHECK(a.bank.side == 3);
    CHECK(a.bank.bits == 4);
    CHECK(support::error_of([&] { learn_filter_bank(images, 3, 9, 400, 1); }) ==
          ErrorCode::rank_deficient);

    const BankLearning big = learn_filter_bank(images, 5, 4, 400, 17, 18);
    const std::vector<FilterBank> banks{big.bank, a.bank};
    const auto maps = ms_bsif(images[0], banks);
    REQUIRE(maps.size() == 6);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(maps[2 * c] == bsif_encode(images[0].planes[c], a.bank.filters[c], 3));
        CHECK(maps[2 * c + 1] == bsif_encode(images[0].planes[c], big.bank.filters[c], 5));
    }
}
