#include <doctest.h>

#include <set>

#include "kinverify/imaging.hpp"
#include "kinverify/lbp.hpp"
#include "kinverify/io.hpp"
#include "kinverify/pipeline.hpp"
#include "kinverify/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kinverify;

namespace {

PipelineConfig fast_config() {
    PipelineConfig cfg;
    cfg.bsif_sizes = {3, 5};
    cfg.lbp_radii = {1};
    cfg.patches = 2000;
    cfg.m1 = 10;
    cfg.m2 = 3;
    cfg.pca_cap = 40;
    return cfg;
}

const SynthDataset& dataset(double difficulty) {
    static std::map<double, SynthDataset> cache;
    auto it = cache.find(difficulty);
    if (it == cache.end())
        it = cache.emplace(difficulty, synth_kin_dataset(7, 20, difficulty,
                                                         oracle::scratch_dir("pipeline")))
                 .first;
    return it->second;
}

}  // namespace

TEST_CASE("method names follow the configured descriptors") {
    PipelineConfig cfg;
    CHECK(method_name(cfg) == "Color MS-BSIF Learning + MS-LBP");
    cfg.lbp_radii.clear();
    CHECK(method_name(cfg) == "Color MS-BSIF Learning");
    cfg.bsif_sizes.clear();
    cfg.lbp_radii = {1};
    CHECK(method_name(cfg) == "Color MS-LBP");
    CHECK(parse_fusion("score") == Fusion::score);
    CHECK(parse_filter_learning("all-data") == FilterLearning::all_data);
    CHECK(support::error_of([] { parse_fusion("late"); }) == ErrorCode::invalid_argument);
}

TEST_CASE("image features are channel-major with BSIF sides before LBP radii") {
    Rng rng(81);
    ColorImage img(64, 64, 1.0);
    for (auto& p : img.planes) p = oracle::random_plane(rng, 64, 64);
    const std::vector<ColorImage> train{img};
    const FilterBank b3 = learn_filter_bank(train, 3, 8, 500, 1).bank;
    const FilterBank b5 = learn_filter_bank(train, 5, 8, 500, 1).bank;
    PipelineConfig cfg;
    cfg.lbp_radii = {2, 1};
    const std::vector<FilterBank> banks{b5, b3};
    const FeatureTensor t = image_features(img, banks, cfg);
    REQUIRE(t.mode1_dim() == 16 * 256);
    REQUIRE(t.mode2_dim() == 12);
    for (int c = 0; c < 3; ++c) {
        const auto& plane = img.planes[std::size_t(c)];
        CHECK(identical(Eigen::VectorXd(t.data.col(4 * c + 0)),
                        block_histograms(bsif_encode(plane, b3.filters[std::size_t(c)], 3))));
        CHECK(identical(Eigen::VectorXd(t.data.col(4 * c + 1)),
                        block_histograms(bsif_encode(plane, b5.filters[std::size_t(c)], 5))));
        CHECK(identical(Eigen::VectorXd(t.data.col(4 * c + 2)), block_histograms(lbp_encode(plane, {1, 8}))));
        CHECK(identical(Eigen::VectorXd(t.data.col(4 * c + 3)), block_histograms(lbp_encode(plane, {2, 8}))));
    }
    const FilterBank b4bits = learn_filter_bank(train, 3, 4, 500, 1).bank;
    const std::vector<FilterBank> mixed{b4bits};
    CHECK(support::error_of([&] { image_features(img, mixed, cfg); }) == ErrorCode::invalid_argument);
}

TEST_CASE("pair expansion adds one negative per kin pair with balanced folds") {
    const auto& ds = dataset(0.0);
    const auto pairs = expand_pairs(ds.records, fast_config());
    REQUIRE(pairs.size() == 2 * ds.records.size());
    for (int f = 1; f <= kFoldCount; ++f) {
        int kin = 0, non = 0;
        for (const auto& p : pairs)
            if (p.fold == f) (p.label == Label::kin ? kin : non) += 1;
        CHECK(kin == non);
        CHECK(kin == 4);
    }
}

TEST_CASE("identical parent and child are verified perfectly without leakage") {
    PipelineConfig cfg = fast_config();
    const CvResult r = run_cross_validation(dataset(0.0).records, cfg);
    CHECK(r.mean_accuracy == doctest::Approx(100.0));
    CHECK(r.eer == doctest::Approx(0.0));
    REQUIRE(r.folds.size() == 5);
    for (const auto& f : r.folds) {
        CHECK(f.train_pairs == 32);
        CHECK(f.dropped_train_pairs == 0);
        CHECK(f.ica.size() == 2);
        CHECK(f.fit_history.size() == 4);
    }
    CHECK(find_leaks(r).empty());
    // at difficulty 0 parent and child files are byte-identical and share an id
    CHECK(r.image_ids.size() == 20);
    std::set<std::string> stages;
    for (const auto& a : r.audit) stages.insert(a.stage);
    CHECK(stages == std::set<std::string>{"filter-learning", "patch-sampling", "pca", "threshold",
                                          "txqda"});
}

TEST_CASE("cross-validation is deterministic and jobs do not change results") {
    PipelineConfig cfg = fast_config();
    const auto& records = dataset(0.4).records;
    const CvResult a = run_cross_validation(records, cfg);
    cfg.jobs = 3;
    const CvResult b = run_cross_validation(records, cfg);
    CHECK(a.mean_accuracy == b.mean_accuracy);
    for (std::size_t f = 0; f < a.folds.size(); ++f) CHECK(a.folds[f].scores == b.folds[f].scores);
    CHECK(a.audit.size() == b.audit.size());
}

TEST_CASE("learning filters on all images is flagged as leakage") {
    PipelineConfig cfg = fast_config();
    cfg.filter_learning = FilterLearning::all_data;
    const CvResult r = run_cross_validation(dataset(0.0).records, cfg);
    const auto leaks = find_leaks(r);
    CHECK_FALSE(leaks.empty());
}

TEST_CASE("precomputed banks skip per-fold learning") {
    const auto& ds = dataset(0.0);
    std::vector<ColorImage> images;
    for (const auto& r : ds.records) {
        const ColorImage raw = load_image(r.parent);
        images.push_back(preprocess(raw, full_window(raw)));
    }
    PipelineConfig cfg = fast_config();
    cfg.filter_learning = FilterLearning::precomputed;
    cfg.banks = {learn_filter_bank(images, 3, 8, 2000, 5, 5, "external").bank};
    const CvResult r = run_cross_validation(ds.records, cfg);
    CHECK(r.mean_accuracy >= 90.0);
    for (const auto& f : r.folds)
        for (std::size_t i = 0; i < f.scores.size(); ++i)
            if (f.labels[i] == Label::kin) CHECK(f.scores[i] == doctest::Approx(1.0));
    for (const auto& a : r.audit)
        if (a.stage == "filter-learning") {
            CHECK(a.image_ids.empty());
            CHECK(a.note.find("external") != std::string::npos);
        }
}

TEST_CASE("score fusion fits one subspace per scale") {
    PipelineConfig cfg = fast_config();
    cfg.fusion = Fusion::score;
    cfg.bits = 4;
    cfg.lbp_radii.clear();
    const CvResult r = run_cross_validation(dataset(0.0).records, cfg);
    CHECK(r.mean_accuracy == doctest::Approx(100.0));
    // two scales, two sweeps, two modes
    for (const auto& f : r.folds) CHECK(f.fit_history.size() == 8);
}

TEST_CASE("training pairs sharing a test image are dropped") {
    auto records = dataset(0.4).records;
    // a fold-2 father-son pair reusing a fold-1 parent
    auto extra = records[1];
    extra.parent = records[0].parent;
    extra.child = records[11].child;
    REQUIRE(records[0].fold == 1);
    REQUIRE(extra.fold == 2);
    REQUIRE(records[11].fold == 2);
    records.push_back(extra);
    PipelineConfig cfg = fast_config();
    const CvResult r = run_cross_validation(records, cfg);
    CHECK(r.folds[0].dropped_train_pairs >= 1);
    CHECK(find_leaks(r).empty());
}

TEST_CASE("image ids depend on bytes and crop") {
    const std::string bytes = "abc";
    CHECK(image_id(bytes, std::nullopt) == image_id(bytes, std::nullopt));
    CHECK(image_id(bytes, std::nullopt) != image_id("abd", std::nullopt));
    CHECK(image_id(bytes, CropWindow{0, 0, 8}) != image_id(bytes, std::nullopt));
    CHECK(image_id(bytes, std::nullopt).size() == 16);
}
