#include "kinverify/cli/commands.hpp"

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kinverify/cli/config.hpp"
#include "kinverify/cli/report.hpp"
#include "kinverify/error.hpp"
#include "kinverify/io.hpp"
#include "kinverify/persistence.hpp"
#include "kinverify/pipeline.hpp"
#include "kinverify/synth.hpp"

namespace kinverify::cli {
namespace {

namespace fs = std::filesystem;

struct Flag {
    CLI::Option* option;
    std::string key;
    std::string value;
};

// Options that map onto config keys; applied after the config file so they win.
class FlagSet {
public:
    void add(CLI::App* app, const std::string& name, const std::string& key,
             const std::string& help) {
        flags_.push_back(std::make_unique<Flag>());
        Flag& f = *flags_.back();
        f.key = key;
        f.option = app->add_option(name, f.value, help);
    }

    void apply_to(RunConfig& config) const {
        for (const auto& f : flags_)
            if (f->option->count() > 0) apply(config, f->key, f->value);
    }

private:
    std::vector<std::unique_ptr<Flag>> flags_;
};

struct ManifestImage {
    fs::path path;
    std::optional<CropWindow> crop;
};

std::vector<ManifestImage> unique_images(std::span<const PairRecord> records) {
    std::vector<ManifestImage> out;
    std::set<std::pair<std::string, std::string>> seen;
    auto add = [&](const fs::path& p, const std::optional<CropWindow>& c) {
        const std::string crop =
            c ? std::to_string(c->x) + "," + std::to_string(c->y) + "," + std::to_string(c->side)
              : "";
        if (seen.insert({p.string(), crop}).second) out.push_back({p, c});
    };
    for (const auto& r : records) {
        add(r.parent, r.parent_crop);
        add(r.child, r.child_crop);
    }
    return out;
}

ColorImage canonical(const ManifestImage& m) {
    const ColorImage raw = load_image(m.path);
    return preprocess(raw, m.crop ? *m.crop : full_window(raw));
}

std::vector<PairRecord> manifest_records(const RunConfig& config) {
    require(!config.manifest.empty(), ErrorCode::invalid_argument,
            "no manifest given (use --manifest or the 'manifest' config key)");
    return load_manifest(config.manifest);
}

fs::path bank_path(const fs::path& dir, int side, int bits) {
    return dir / ("bsif_L" + std::to_string(side) + "_n" + std::to_string(bits) + ".kbsf");
}

std::vector<FilterBank> load_banks(const RunConfig& config) {
    const auto dir = config.resolved_banks_dir();
    std::vector<FilterBank> banks;
    for (int side : config.pipeline.bsif_sizes) {
        const auto path = bank_path(dir, side, config.pipeline.bits);
        std::error_code ec;
        if (!fs::is_regular_file(path, ec)) {
            std::string sizes;
            for (int s : config.pipeline.bsif_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
            fail(ErrorCode::missing_artifact,
                 "filter bank " + path.string() + " not found; run `kinverify learn-filters --manifest " +
                     config.manifest.string() + " --sizes " + sizes + " --bits " +
                     std::to_string(config.pipeline.bits) + " --banks " + dir.string() +
                     "` first");
        }
        FilterBank bank = load_filter_bank(path);
        require(bank.side == side && bank.bits == config.pipeline.bits, ErrorCode::decode,
                path.string() + ": bank holds L=" + std::to_string(bank.side) + ", n=" +
                    std::to_string(bank.bits));
        banks.push_back(std::move(bank));
    }
    return banks;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorCode::io, "cannot create directory " + dir.string());
}

int cmd_learn_filters(const RunConfig& config, std::ostream& out) {
    const auto records = manifest_records(config);
    const auto list = unique_images(records);
    std::vector<ColorImage> images;
    for (const auto& m : list) images.push_back(canonical(m));
    const auto dir = config.resolved_banks_dir();
    ensure_dir(dir);
    const auto& p = config.pipeline;
    require(!p.bsif_sizes.empty(), ErrorCode::invalid_argument, "no BSIF sizes given");
    const std::string tag = "learn-filters " + config.manifest.filename().string() + " (" +
                            std::to_string(images.size()) + " images)";
    for (int side : p.bsif_sizes) {
        const auto learned =
            learn_filter_bank(images, side, p.bits, p.patches, p.seeds.patch, p.seeds.ica, tag, p.ica);
        for (Channel c : kChannels) {
            const auto& s = learned.stats[std::size_t(c)];
            static constexpr const char* names[] = {"red", "green", "blue"};
            out << "L=" << side << " " << names[std::size_t(c)] << ": " << s.iterations
                << " iterations, final change " << s.final_delta << ", orthonormality error "
                << s.orthonormality_error << "\n";
        }
        const auto path = bank_path(dir, side, p.bits);
        save(learned.bank, path);
        out << "wrote " << path.string() << "\n";
    }
    return 0;
}

std::string feature_key(const RunConfig& config, std::string_view image_bytes,
                        const std::optional<CropWindow>& crop, std::span<const FilterBank> banks) {
    const auto& p = config.pipeline;
    std::string salt = image_id(image_bytes, crop);
    salt += "|lbp=";
    for (int r : p.lbp_radii) salt += std::to_string(r) + ",";
    salt += "|P=" + std::to_string(p.lbp_neighbors) + "|grid=" + std::to_string(p.grid.rows) +
            "x" + std::to_string(p.grid.cols);
    for (const auto& b : banks) salt += "|bank=" + hex64(fnv1a(encode(b)));
    return hex64(fnv1a(salt));
}

int cmd_extract(const RunConfig& config, std::ostream& out, std::ostream& log) {
    const auto records = manifest_records(config);
    const auto list = unique_images(records);
    const auto banks = config.pipeline.bsif_sizes.empty() ? std::vector<FilterBank>{}
                                                          : load_banks(config);
    const auto dir = config.resolved_cache_dir();
    ensure_dir(dir);
    std::size_t written = 0, hits = 0;
    for (const auto& m : list) {
        const std::string bytes = read_file(m.path);
        const auto path = dir / (feature_key(config, bytes, m.crop, banks) + ".kfea");
        std::error_code ec;
        if (fs::is_regular_file(path, ec)) {
            try {
                (void)load_features(path);
                log << "cache hit " << m.path.string() << " -> " << path.string() << "\n";
                ++hits;
                continue;
            } catch (const Error&) {
                log << "cache entry " << path.string() << " unreadable, rebuilding\n";
            }
        }
        save(image_features(canonical(m), banks, config.pipeline), path);
        out << m.path.string() << " -> " << path.string() << "\n";
        ++written;
    }
    out << written << " written, " << hits << " cached\n";
    return 0;
}

int cmd_eval(RunConfig config, std::ostream& out, std::ostream& log) {
    const auto records = manifest_records(config);
    if (config.pipeline.filter_learning == FilterLearning::precomputed)
        config.pipeline.banks = load_banks(config);
    const auto result = run_cross_validation(
        records, config.pipeline, [&](std::string_view msg) { log << msg << "\n"; });
    ensure_dir(config.out_dir);
    const std::string stem = std::string(to_string(config.pipeline.fusion));
    const auto json_path = config.out_dir / ("report_" + stem + ".json");
    const auto text_path = config.out_dir / ("report_" + stem + ".txt");
    const auto audit_path = config.out_dir / ("audit_" + stem + ".json");
    const std::string table = table_text(result, config);
    write_file_atomic(json_path, report_json(result, config).dump(2) + "\n");
    write_file_atomic(text_path, table);
    write_file_atomic(audit_path, audit_json(result).dump(2) + "\n");
    out << table << "\nwrote " << json_path.string() << "\n";
    const auto leaks = find_leaks(result);
    for (const auto& l : leaks) log << "leak: " << l << "\n";
    return 0;
}

int cmd_synth(const RunConfig& config, std::ostream& out) {
    const auto ds = synth_kin_dataset(config.synth_seed, config.families, config.difficulty,
                                      config.out_dir);
    out << "wrote " << ds.records.size() << " pairs to " << ds.manifest.string() << "\n";
    return 0;
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::ordered_json vector_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

int cmd_inspect(const fs::path& path, std::ostream& out) {
    const std::string bytes = read_file(path);
    nlohmann::ordered_json j;
    switch (sniff(bytes, path.string())) {
        case ArtifactKind::filter_bank: {
            const auto bank = decode_filter_bank(bytes, path.string());
            j["type"] = "KBSF";
            j["side"] = bank.side;
            j["bits"] = bank.bits;
            j["seed"] = bank.seed;
            j["source_tag"] = bank.source_tag;
            for (Channel c : kChannels) {
                static constexpr const char* names[] = {"red", "green", "blue"};
                j["filters"][names[std::size_t(c)]] = matrix_json(bank.filters[std::size_t(c)]);
            }
            break;
        }
        case ArtifactKind::features: {
            const auto t = decode_features(bytes, path.string());
            j["type"] = "KFEA";
            j["mode1"] = t.mode1_dim();
            j["mode2"] = t.mode2_dim();
            j["data"] = matrix_json(t.data);
            break;
        }
        case ArtifactKind::subspace_model: {
            const auto m = decode_subspace_model(bytes, path.string());
            j["type"] = "KTXQ";
            j["sweeps"] = m.sweeps;
            j["seed"] = m.seed;
            j["modes"] = nlohmann::ordered_json::array();
            for (std::size_t k = 0; k < m.projections.size(); ++k)
                j["modes"].push_back({{"input_dim", m.projections[k].rows()},
                                      {"output_dim", m.projections[k].cols()},
                                      {"eigenvalues", vector_json(m.eigenvalues[k])},
                                      {"projection", matrix_json(m.projections[k])}});
            if (m.pca)
                j["pca"] = {{"input_dim", m.pca->basis.rows()},
                            {"output_dim", m.pca->basis.cols()},
                            {"variances", vector_json(m.pca->variances)},
                            {"mean", vector_json(m.pca->mean)},
                            {"basis", matrix_json(m.pca->basis)}};
            else
                j["pca"] = nullptr;
            break;
        }
    }
    out << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kinship verification with learned colour BSIF, multiscale LBP and TXQDA",
                 "kinverify"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    RunConfig config;
    std::string config_file;
    std::vector<std::string> overrides;
    std::string inspect_path;
    bool shuffle = false;
    FlagSet flags;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "Key-value config file or JSON report");
        sub->add_option("--set", overrides, "Extra key=value overrides")->take_all();
        flags.add(sub, "--out", "out", "Output directory");
        flags.add(sub, "--jobs", "jobs", "Worker threads");
    };

    auto* learn = app.add_subcommand("learn-filters", "Learn one colour BSIF bank per size");
    common(learn);
    flags.add(learn, "--manifest", "manifest", "Pair manifest (CSV)");
    flags.add(learn, "--sizes", "bsif_sizes", "Filter sizes, e.g. 3,7,11");
    flags.add(learn, "--bits", "bits", "Filters per bank");
    flags.add(learn, "--patches", "patches", "Patches per channel");
    flags.add(learn, "--banks", "banks", "Bank directory");
    std::string learn_seed;
    auto* seed_opt = learn->add_option("--seed", learn_seed, "Patch sampling and ICA seed");

    auto* extract = app.add_subcommand("extract", "Write one feature tensor per image");
    common(extract);
    flags.add(extract, "--manifest", "manifest", "Pair manifest (CSV)");
    flags.add(extract, "--sizes", "bsif_sizes", "BSIF sizes (banks must exist)");
    flags.add(extract, "--bits", "bits", "Filters per bank");
    flags.add(extract, "--radii", "lbp_radii", "LBP radii");
    flags.add(extract, "--banks", "banks", "Bank directory");
    flags.add(extract, "--cache", "cache", "Feature cache directory");

    auto* eval = app.add_subcommand("eval", "Five-fold cross-validation report");
    common(eval);
    flags.add(eval, "--manifest", "manifest", "Pair manifest (CSV)");
    flags.add(eval, "--fusion", "fusion", "feature or score");
    flags.add(eval, "--filter-learning", "filter_learning", "per-fold, all-data or precomputed");
    flags.add(eval, "--sizes", "bsif_sizes", "BSIF sizes");
    flags.add(eval, "--bits", "bits", "Filters per bank");
    flags.add(eval, "--patches", "patches", "Patches per channel");
    flags.add(eval, "--radii", "lbp_radii", "LBP radii");
    flags.add(eval, "--banks", "banks", "Bank directory (precomputed)");
    flags.add(eval, "--sweeps", "sweeps", "TXQDA alternation sweeps");
    flags.add(eval, "--m1", "m1", "Mode-1 projection size");
    flags.add(eval, "--m2", "m2", "Mode-2 projection size");
    flags.add(eval, "--pca-cap", "pca_cap", "Mode-1 PCA cap");
    auto* shuffle_opt = eval->add_flag("--shuffle-labels", shuffle, "Permutation control");

    auto* synth = app.add_subcommand("synth", "Write a synthetic kin dataset");
    common(synth);
    flags.add(synth, "--families", "families", "Number of families (>= 10)");
    flags.add(synth, "--seed", "synth_seed", "Dataset seed");
    flags.add(synth, "--difficulty", "difficulty", "0 (identical) .. 1 (no shared signal)");

    auto* inspect = app.add_subcommand("inspect", "Dump a KBSF/KFEA/KTXQ file as JSON");
    inspect->add_option("file", inspect_path, "Artifact file")->required();

    std::vector<const char*> argv{"kinverify"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (char& c : msg)
            if (c == '\n') c = ' ';
        err << "error: usage: " << msg << "\n";
        return 2;
    }

    try {
        if (!config_file.empty()) apply_file(config, config_file);
        flags.apply_to(config);
        if (seed_opt->count() > 0) {
            apply(config, "seed_patch", learn_seed);
            apply(config, "seed_ica", learn_seed);
        }
        if (shuffle_opt->count() > 0) config.pipeline.shuffle_labels = shuffle;
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            require(eq != std::string::npos, ErrorCode::invalid_argument,
                    "--set expects key=value, got '" + kv + "'");
            apply(config, kv.substr(0, eq), kv.substr(eq + 1));
        }

        if (learn->parsed()) return cmd_learn_filters(config, out);
        if (extract->parsed()) return cmd_extract(config, out, err);
        if (eval->parsed()) return cmd_eval(config, out, err);
        if (synth->parsed()) return cmd_synth(config, out);
        if (inspect->parsed()) return cmd_inspect(inspect_path, out);
    } catch (const Error& e) {
        std::string msg = e.what();
        for (char& c : msg)
            if (c == '\n') c = ' ';
        err << "error: " << to_string(e.code()) << ": " << msg << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace kinverify::cli
