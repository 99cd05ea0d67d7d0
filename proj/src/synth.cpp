#include "kinverify/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <vector>

#include "kinverify/error.hpp"
#include "kinverify/rng.hpp"

namespace kinverify {
namespace {

constexpr int kOctaves = 5;

// Fractal value noise: normal values on progressively finer lattices
// (cells of 32, 16, 8, 4, 2 px), smoothstep-interpolated, amplitude halving
// per octave so coarse structure dominates. A luminance field shared by all
// channels plus a weaker per-channel field gives correlated colour planes.
// Each plane is scaled to zero mean and unit RMS.
Plane value_noise(Rng& rng) {
    Plane p(kCanonicalSide, kCanonicalSide, 0.0);
    double amp = 1.0;
    for (int o = 0; o < kOctaves; ++o) {
        const int cell = 32 >> o;
        const int nodes = kCanonicalSide / cell + 2;
        std::vector<double> lattice(std::size_t(nodes) * std::size_t(nodes));
        for (double& v : lattice) v = rng.normal();
        for (int y = 0; y < kCanonicalSide; ++y) {
            const double gy = (y + 0.5) / cell;
            const int y0 = int(gy);
            double ty = gy - y0;
            ty = ty * ty * (3.0 - 2.0 * ty);
            for (int x = 0; x < kCanonicalSide; ++x) {
                const double gx = (x + 0.5) / cell;
                const int x0 = int(gx);
                double tx = gx - x0;
                tx = tx * tx * (3.0 - 2.0 * tx);
                auto at = [&](int xx, int yy) { return lattice[std::size_t(yy * nodes + xx)]; };
                const double top = at(x0, y0) + tx * (at(x0 + 1, y0) - at(x0, y0));
                const double bottom = at(x0, y0 + 1) + tx * (at(x0 + 1, y0 + 1) - at(x0, y0 + 1));
                p(x, y) += amp * (top + ty * (bottom - top));
            }
        }
        amp *= 0.5;
    }
    return p;
}

void standardize(Plane& p) {
    double sum = 0.0, sq = 0.0;
    for (double v : p.data()) {
        sum += v;
        sq += v * v;
    }
    const double n = double(p.size());
    const double mean = sum / n;
    const double rms = std::sqrt(std::max(sq / n - mean * mean, 1e-12));
    for (double& v : p.data()) v = (v - mean) / rms;
}

ColorImage texture(Rng& rng) {
    const Plane luma = value_noise(rng);
    ColorImage img(kCanonicalSide, kCanonicalSide, 1.0);
    for (Plane& p : img.planes) {
        const Plane chroma = value_noise(rng);
        for (std::size_t i = 0; i < p.size(); ++i)
            p.data()[i] = luma.data()[i] + 0.5 * chroma.data()[i];
        standardize(p);
    }
    return img;
}

}  // namespace

ColorImage synth_face(std::uint64_t seed, int family, bool child, double difficulty) {
    require(difficulty >= 0.0 && difficulty <= 1.0, ErrorCode::invalid_argument,
            "difficulty must lie in [0, 1]");
    Rng family_rng(seed, 4 * std::uint64_t(family));
    Rng own_rng(seed, 4 * std::uint64_t(family) + (child ? 2 : 1));
    const ColorImage shared = texture(family_rng);
    const ColorImage own = texture(own_rng);

    ColorImage img(kCanonicalSide, kCanonicalSide, 1.0);
    for (std::size_t c = 0; c < 3; ++c) {
        auto out = img.planes[c].data();
        auto fam = shared.planes[c].data();
        auto ind = own.planes[c].data();
        for (std::size_t i = 0; i < out.size(); ++i) {
            double v = (1.0 - difficulty) * fam[i];
            // skip the draws entirely at difficulty 0 so parent == child exactly
            if (difficulty > 0.0) v += difficulty * (ind[i] + 0.7 * own_rng.normal());
            out[i] = std::clamp(0.5 + 0.12 * v, 0.0, 1.0);
        }
    }
    return img;
}

SynthDataset synth_kin_dataset(std::uint64_t seed, int families, double difficulty,
                               const std::filesystem::path& out_dir) {
    require(families >= 10, ErrorCode::invalid_argument,
            "synthetic datasets need at least 10 families (got " + std::to_string(families) +
                "); smaller sets leave folds without a derangement");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec, ErrorCode::io, "cannot create " + out_dir.string());

    SynthDataset ds;
    ds.manifest = out_dir / "manifest.csv";
    const int relation_blocks = families / 10;
    for (int i = 0; i < families; ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "fam%03d", i);
        PairRecord r;
        r.relation = kRelations[std::size_t(std::min(i / 10, relation_blocks - 1) % 4)];
        r.parent = out_dir / (std::string(stem) + "_parent.png");
        r.child = out_dir / (std::string(stem) + "_child.png");
        r.label = Label::kin;
        r.fold = i % kFoldCount + 1;
        save_png(synth_face(seed, i, false, difficulty), r.parent);
        save_png(synth_face(seed, i, true, difficulty), r.child);
        ds.records.push_back(std::move(r));
    }
    write_manifest(ds.manifest, ds.records);
    return ds;
}

}  // namespace kinverify
