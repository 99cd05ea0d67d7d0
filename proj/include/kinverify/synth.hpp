#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kinverify/imaging.hpp"
#include "kinverify/protocol.hpp"

namespace kinverify {

struct SynthDataset {
    std::filesystem::path manifest;
    std::vector<PairRecord> records;  // kin pairs only, folds assigned
};

/// Renders one 64x64 face stand-in per parent and child. Both members of a
/// family share a family texture; `difficulty` in [0, 1] blends it towards an
/// individual texture plus white noise (0: parent and child identical, 1: no
/// shared signal). Family i lands in fold (i mod 5) + 1.
SynthDataset synth_kin_dataset(std::uint64_t seed, int families, double difficulty,
                               const std::filesystem::path& out_dir);

/// The in-memory image behind synth_kin_dataset (before 8-bit quantisation).
ColorImage synth_face(std::uint64_t seed, int family, bool child, double difficulty);

}  // namespace kinverify
