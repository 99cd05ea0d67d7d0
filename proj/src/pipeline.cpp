#include "kinverify/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "kinverify/error.hpp"
#include "kinverify/imaging.hpp"
#include "kinverify/io.hpp"
#include "kinverify/lbp.hpp"

namespace kinverify {
namespace {

template <class F>
void parallel_for(std::size_t n, int jobs, F&& body) {
    const std::size_t workers = std::min<std::size_t>(std::size_t(std::max(jobs, 1)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::string crop_text(const std::optional<CropWindow>& crop) {
    if (!crop) return "full";
    return std::to_string(crop->x) + "," + std::to_string(crop->y) + "," +
           std::to_string(crop->side);
}

// Unique (file, crop) combinations behind a pair list.
struct ImageTable {
    std::vector<std::filesystem::path> paths;
    std::vector<std::optional<CropWindow>> crops;
    std::vector<std::array<std::size_t, 2>> pair_images;  // parent, child per pair

    explicit ImageTable(std::span<const PairRecord> pairs) {
        std::map<std::string, std::size_t> index;
        auto intern = [&](const std::filesystem::path& p, const std::optional<CropWindow>& c) {
            const std::string key = p.string() + "#" + crop_text(c);
            auto [it, fresh] = index.emplace(key, paths.size());
            if (fresh) {
                paths.push_back(p);
                crops.push_back(c);
            }
            return it->second;
        };
        for (const auto& r : pairs)
            pair_images.push_back({intern(r.parent, r.parent_crop), intern(r.child, r.child_crop)});
    }

    std::size_t size() const { return paths.size(); }
};

std::vector<std::string> ids_of(const std::vector<std::size_t>& images,
                                const std::vector<std::string>& ids) {
    std::vector<std::string> out;
    for (auto i : images) out.push_back(ids[i]);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<FilterBank> learn_banks(std::span<const ColorImage> images,
                                    const PipelineConfig& cfg, const std::string& tag,
                                    std::map<int, std::array<IcaStats, 3>>& stats) {
    std::vector<FilterBank> banks(cfg.bsif_sizes.size());
    std::vector<std::array<IcaStats, 3>> per(cfg.bsif_sizes.size());
    parallel_for(banks.size(), cfg.jobs, [&](std::size_t k) {
        auto learned = learn_filter_bank(images, cfg.bsif_sizes[k], cfg.bits, cfg.patches,
                                         cfg.seeds.patch, cfg.seeds.ica, tag, cfg.ica);
        banks[k] = std::move(learned.bank);
        per[k] = learned.stats;
    });
    for (std::size_t k = 0; k < banks.size(); ++k) stats[banks[k].side] = per[k];
    return banks;
}

std::vector<Eigen::VectorXd> interleave(std::vector<Eigen::VectorXd> bsif,
                                        const std::vector<Eigen::VectorXd>& lbp,
                                        std::size_t sides, std::size_t radii) {
    std::vector<Eigen::VectorXd> cols;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t b = 0; b < sides; ++b) cols.push_back(std::move(bsif[c * sides + b]));
        for (std::size_t r = 0; r < radii; ++r) cols.push_back(lbp[c * radii + r]);
    }
    return cols;
}

std::vector<Eigen::VectorXd> histograms(const std::vector<CodeMap>& maps, const GridSpec& grid) {
    std::vector<Eigen::VectorXd> out;
    for (const CodeMap& m : maps) out.push_back(block_histograms(m, grid));
    return out;
}

void validate(const PipelineConfig& cfg) {
    require(cfg.filter_learning == FilterLearning::precomputed ? !cfg.banks.empty()
                                                               : true,
            ErrorCode::missing_artifact,
            "precomputed filter learning selected but no filter banks were supplied");
    const bool has_bsif = cfg.filter_learning == FilterLearning::precomputed
                              ? !cfg.banks.empty()
                              : !cfg.bsif_sizes.empty();
    require(has_bsif || !cfg.lbp_radii.empty(), ErrorCode::invalid_argument,
            "configure at least one BSIF size or LBP radius");
    require(cfg.m1 >= 1 && cfg.m2 >= 1 && cfg.sweeps >= 0 && cfg.pca_cap >= 1,
            ErrorCode::invalid_argument, "m1, m2 and pca_cap must be >= 1, sweeps >= 0");
    require(cfg.jobs >= 1, ErrorCode::invalid_argument, "jobs must be >= 1");
    std::set<int> sizes(cfg.bsif_sizes.begin(), cfg.bsif_sizes.end());
    require(sizes.size() == cfg.bsif_sizes.size(), ErrorCode::invalid_argument,
            "duplicate BSIF size");
    std::set<int> radii(cfg.lbp_radii.begin(), cfg.lbp_radii.end());
    require(radii.size() == cfg.lbp_radii.size(), ErrorCode::invalid_argument,
            "duplicate LBP radius");
}

}  // namespace

std::string_view to_string(Fusion f) noexcept { return f == Fusion::feature ? "feature" : "score"; }

Fusion parse_fusion(std::string_view text) {
    if (text == "feature") return Fusion::feature;
    if (text == "score") return Fusion::score;
    fail(ErrorCode::invalid_argument,
         "unknown fusion '" + std::string(text) + "' (expected feature or score)");
}

std::string_view to_string(FilterLearning f) noexcept {
    switch (f) {
        case FilterLearning::per_fold: return "per-fold";
        case FilterLearning::all_data: return "all-data";
        case FilterLearning::precomputed: return "precomputed";
    }
    return "unknown";
}

FilterLearning parse_filter_learning(std::string_view text) {
    if (text == "per-fold") return FilterLearning::per_fold;
    if (text == "all-data") return FilterLearning::all_data;
    if (text == "precomputed") return FilterLearning::precomputed;
    fail(ErrorCode::invalid_argument, "unknown filter learning mode '" + std::string(text) +
                                          "' (expected per-fold, all-data or precomputed)");
}

std::string method_name(const PipelineConfig& cfg) {
    const bool bsif = cfg.filter_learning == FilterLearning::precomputed ? !cfg.banks.empty()
                                                                         : !cfg.bsif_sizes.empty();
    const bool lbp = !cfg.lbp_radii.empty();
    if (bsif && lbp) return "Color MS-BSIF Learning + MS-LBP";
    if (bsif) return "Color MS-BSIF Learning";
    return "Color MS-LBP";
}

std::string image_id(std::string_view file_bytes, const std::optional<CropWindow>& crop) {
    return hex64(fnv1a(crop_text(crop), fnv1a(file_bytes)));
}

std::vector<Eigen::VectorXd> feature_columns(const ColorImage& img,
                                             std::span<const FilterBank> banks,
                                             const PipelineConfig& cfg) {
    std::vector<Eigen::VectorXd> bsif, lbp;
    if (!banks.empty()) bsif = histograms(ms_bsif(img, banks), cfg.grid);
    if (!cfg.lbp_radii.empty())
        lbp = histograms(ms_lbp(img, cfg.lbp_radii, cfg.lbp_neighbors), cfg.grid);
    return interleave(std::move(bsif), lbp, banks.size(), cfg.lbp_radii.size());
}

FeatureTensor image_features(const ColorImage& img, std::span<const FilterBank> banks,
                             const PipelineConfig& cfg) {
    const auto cols = feature_columns(img, banks, cfg);
    require(!cols.empty(), ErrorCode::invalid_argument, "no descriptors configured");
    FeatureTensor t;
    t.data.resize(cols[0].size(), Eigen::Index(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        require(cols[j].size() == cols[0].size(), ErrorCode::invalid_argument,
                "descriptors differ in code width; one tensor needs equal histogram sizes");
        t.data.col(Eigen::Index(j)) = cols[j];
    }
    return t;
}

std::vector<PairRecord> expand_pairs(std::span<const PairRecord> records,
                                     const PipelineConfig& cfg) {
    std::vector<PairRecord> pairs(records.begin(), records.end());
    assign_folds(pairs, cfg.seeds.folds);
    const bool has_negatives = std::any_of(pairs.begin(), pairs.end(),
                                           [](const auto& r) { return r.label == Label::non_kin; });
    if (!has_negatives) {
        auto negatives = generate_negatives(pairs, cfg.seeds.negatives);
        pairs.insert(pairs.end(), negatives.begin(), negatives.end());
    }
    if (cfg.shuffle_labels) pairs = shuffle_labels(pairs, cfg.seeds.shuffle);
    return pairs;
}

CvResult run_cross_validation(std::span<const PairRecord> records, const PipelineConfig& cfg,
                              const ProgressFn& progress) {
    validate(cfg);
    auto say = [&](const std::string& msg) {
        if (progress) progress(msg);
    };

    CvResult res;
    res.pairs = expand_pairs(records, cfg);
    res.distribution = relation_distribution(res.pairs);
    for (int f = 1; f <= kFoldCount; ++f) {
        std::size_t kin = 0, non = 0;
        for (const auto& r : res.pairs)
            if (r.fold == f) (r.label == Label::kin ? kin : non) += 1;
        require(kin > 0 && non > 0, ErrorCode::degenerate_input,
                "fold " + std::to_string(f) + " needs both kin and non-kin pairs");
    }

    const ImageTable table(res.pairs);
    std::vector<ColorImage> images(table.size());
    std::vector<std::string> ids(table.size());
    say("loading " + std::to_string(table.size()) + " images");
    parallel_for(table.size(), cfg.jobs, [&](std::size_t i) {
        const std::string bytes = read_file(table.paths[i]);
        ids[i] = image_id(bytes, table.crops[i]);
        const ColorImage raw = load_image(table.paths[i]);
        images[i] = preprocess(raw, table.crops[i] ? *table.crops[i] : full_window(raw));
    });
    for (std::size_t i = 0; i < table.size(); ++i)
        res.image_ids[ids[i]] = table.paths[i].string() + "#" + crop_text(table.crops[i]);

    // LBP involves no learning, so its histograms are shared by every fold.
    std::vector<int> radii = cfg.lbp_radii;
    std::sort(radii.begin(), radii.end());
    std::vector<std::vector<Eigen::VectorXd>> lbp_hist(table.size());
    if (!radii.empty()) {
        say("encoding LBP");
        parallel_for(table.size(), cfg.jobs, [&](std::size_t i) {
            lbp_hist[i] = histograms(ms_lbp(images[i], radii, cfg.lbp_neighbors), cfg.grid);
        });
    }

    std::vector<FilterBank> shared_banks;
    std::map<int, std::array<IcaStats, 3>> shared_stats;
    std::string bank_note;
    if (cfg.filter_learning == FilterLearning::precomputed) {
        shared_banks = cfg.banks;
        for (const auto& b : shared_banks)
            bank_note += (bank_note.empty() ? "" : ";") + std::string("L=") +
                         std::to_string(b.side) + ":" + b.source_tag;
        bank_note = "precomputed banks " + bank_note;
    } else if (cfg.filter_learning == FilterLearning::all_data && !cfg.bsif_sizes.empty()) {
        say("learning filter banks on all images");
        shared_banks = learn_banks(images, cfg, "all-data", shared_stats);
        bank_note = "all-data";
    }
    std::vector<std::size_t> all_images(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) all_images[i] = i;

    std::vector<double> pooled_scores;
    std::vector<Label> pooled_labels;
    for (int fold = 1; fold <= kFoldCount; ++fold) {
        FoldResult fr;
        fr.fold = fold;
        const std::string tag = "fold " + std::to_string(fold);

        std::vector<std::size_t> test_pairs, train_pairs;
        std::set<std::size_t> test_images;
        for (std::size_t p = 0; p < res.pairs.size(); ++p)
            if (res.pairs[p].fold == fold) {
                test_pairs.push_back(p);
                test_images.insert(table.pair_images[p][0]);
                test_images.insert(table.pair_images[p][1]);
            }
        for (std::size_t p = 0; p < res.pairs.size(); ++p) {
            if (res.pairs[p].fold == fold) continue;
            if (test_images.count(table.pair_images[p][0]) ||
                test_images.count(table.pair_images[p][1])) {
                ++fr.dropped_train_pairs;
                continue;
            }
            train_pairs.push_back(p);
        }
        fr.train_pairs = train_pairs.size();
        std::vector<std::size_t> train_images;
        for (auto p : train_pairs) {
            train_images.push_back(table.pair_images[p][0]);
            train_images.push_back(table.pair_images[p][1]);
        }
        std::sort(train_images.begin(), train_images.end());
        train_images.erase(std::unique(train_images.begin(), train_images.end()),
                           train_images.end());
        res.test_ids[fold] = ids_of({test_images.begin(), test_images.end()}, ids);
        const auto train_ids = ids_of(train_images, ids);

        // filter banks
        std::vector<FilterBank> banks;
        if (cfg.filter_learning == FilterLearning::per_fold && !cfg.bsif_sizes.empty()) {
            say(tag + ": learning filter banks on " + std::to_string(train_images.size()) +
                " training images");
            std::vector<ColorImage> train_set;
            for (auto i : train_images) train_set.push_back(images[i]);
            banks = learn_banks(train_set, cfg, tag, fr.ica);
            res.audit.push_back({fold, "patch-sampling", train_ids, "per-fold"});
            res.audit.push_back({fold, "filter-learning", train_ids, "per-fold"});
        } else if (!shared_banks.empty()) {
            banks = shared_banks;
            fr.ica = shared_stats;
            const auto touched =
                cfg.filter_learning == FilterLearning::all_data ? ids_of(all_images, ids)
                                                                : std::vector<std::string>{};
            res.audit.push_back({fold, "patch-sampling", touched, bank_note});
            res.audit.push_back({fold, "filter-learning", touched, bank_note});
        }
        std::stable_sort(banks.begin(), banks.end(),
                         [](const FilterBank& a, const FilterBank& b) { return a.side < b.side; });

        // per-image histogram columns, channel-major: BSIF sides then LBP radii
        say(tag + ": encoding");
        const std::size_t per_channel = banks.size() + radii.size();
        std::vector<std::vector<Eigen::VectorXd>> columns(table.size());
        parallel_for(table.size(), cfg.jobs, [&](std::size_t i) {
            std::vector<Eigen::VectorXd> bsif;
            if (!banks.empty()) bsif = histograms(ms_bsif(images[i], banks), cfg.grid);
            columns[i] = interleave(std::move(bsif), lbp_hist[i], banks.size(), radii.size());
        });

        // feature fusion: one tensor with every column; score fusion: one per scale
        std::vector<std::vector<std::size_t>> groups;
        if (cfg.fusion == Fusion::feature) {
            groups.emplace_back();
            for (std::size_t k = 0; k < 3 * per_channel; ++k) groups.back().push_back(k);
        } else {
            for (std::size_t s = 0; s < per_channel; ++s)
                groups.push_back({s, per_channel + s, 2 * per_channel + s});
        }

        std::vector<std::vector<double>> group_scores(groups.size());
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto& cols = groups[g];
            const Eigen::Index d1 = columns[0][cols[0]].size();
            for (auto k : cols)
                require(columns[0][k].size() == d1, ErrorCode::invalid_argument,
                        "feature fusion needs equal histogram sizes; BSIF bits and LBP "
                        "neighbours give different code widths (use score fusion)");
            std::vector<FeatureTensor> tensors(table.size());
            for (std::size_t i = 0; i < table.size(); ++i) {
                tensors[i].data.resize(d1, Eigen::Index(cols.size()));
                for (std::size_t j = 0; j < cols.size(); ++j)
                    tensors[i].data.col(Eigen::Index(j)) = columns[i][cols[j]];
            }

            std::vector<TensorPair> training;
            for (auto p : train_pairs)
                training.push_back({&tensors[table.pair_images[p][0]],
                                    &tensors[table.pair_images[p][1]],
                                    res.pairs[p].label == Label::kin});
            TxqdaOptions opt;
            opt.m1 = std::min<int>(cfg.m1, int(d1));
            opt.m2 = std::min<int>(cfg.m2, int(cols.size()));
            opt.sweeps = cfg.sweeps;
            opt.pca_cap = cfg.pca_cap;
            opt.seed = cfg.seeds.fit;
            say(tag + ": fitting subspace " + std::to_string(g + 1) + "/" +
                std::to_string(groups.size()));
            TxqdaFit fit = txqda_fit(training, opt);
            fr.fit_history.insert(fr.fit_history.end(), fit.history.begin(), fit.history.end());

            std::vector<Eigen::VectorXd> projected(table.size());
            for (auto i : train_images) projected[i] = project(fit.model, tensors[i]);
            for (auto i : test_images) projected[i] = project(fit.model, tensors[i]);
            auto& out = group_scores[g];
            out.resize(res.pairs.size(), 0.0);
            for (std::size_t p = 0; p < res.pairs.size(); ++p) {
                const auto [a, b] = table.pair_images[p];
                if (projected[a].size() && projected[b].size())
                    out[p] = cosine_score(projected[a], projected[b]);
            }
        }
        if (cfg.sweeps > 0) {
            res.audit.push_back({fold, "pca", train_ids, ""});
            res.audit.push_back({fold, "txqda", train_ids, ""});
        }

        auto fused = [&](std::size_t p) {
            std::vector<double> s;
            for (const auto& gs : group_scores) s.push_back(gs[p]);
            return fuse_scores(s);
        };
        std::vector<double> train_scores;
        std::vector<Label> train_labels;
        for (auto p : train_pairs) {
            train_scores.push_back(fused(p));
            train_labels.push_back(res.pairs[p].label);
        }
        fr.threshold = choose_threshold(train_scores, train_labels);
        res.audit.push_back({fold, "threshold", train_ids, ""});

        for (auto p : test_pairs) {
            fr.scores.push_back(fused(p));
            fr.labels.push_back(res.pairs[p].label);
            fr.relations.push_back(res.pairs[p].relation);
        }
        fr.metrics = compute_metrics(fr.scores, fr.labels, fr.relations, fr.threshold);
        pooled_scores.insert(pooled_scores.end(), fr.scores.begin(), fr.scores.end());
        pooled_labels.insert(pooled_labels.end(), fr.labels.begin(), fr.labels.end());
        say(tag + ": accuracy " + std::to_string(fr.metrics.accuracy) + "%");
        res.folds.push_back(std::move(fr));
    }

    double acc = 0.0;
    std::map<Relation, std::pair<double, int>> rel;
    for (const auto& fr : res.folds) {
        acc += fr.metrics.accuracy;
        for (const auto& [r, a] : fr.metrics.relation_accuracy) {
            rel[r].first += a;
            rel[r].second += 1;
        }
    }
    res.mean_accuracy = acc / double(res.folds.size());
    for (const auto& [r, sum] : rel) res.relation_accuracy[r] = sum.first / sum.second;
    res.roc = roc_curve(pooled_scores, pooled_labels);
    res.eer = equal_error_rate(res.roc);
    return res;
}

std::vector<std::string> find_leaks(const CvResult& result) {
    std::vector<std::string> leaks;
    for (const auto& e : result.audit) {
        const auto it = result.test_ids.find(e.fold);
        if (it == result.test_ids.end()) continue;
        for (const auto& id : e.image_ids)
            if (std::binary_search(it->second.begin(), it->second.end(), id))
                leaks.push_back("fold " + std::to_string(e.fold) + " " + e.stage +
                                " used test image " + id);
    }
    return leaks;
}

}  // namespace kinverify
