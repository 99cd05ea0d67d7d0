#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "kinverify/bsif.hpp"
#include "kinverify/features.hpp"
#include "kinverify/subspace.hpp"

namespace kinverify {

// Little-endian binary artifacts, each opening with a 4-byte magic and a u32
// format version:
//   KBSF  side, bits, channels (u32), seed (u64), filters (f64, channel-major,
//         row-major per channel), tag (u32 length + UTF-8)
//   KFEA  mode1, mode2 (u32), data (f64, column-major)
//   KTXQ  mode count (u32), per mode d, m (u32) + W (f64, column-major);
//         PCA flag (u8) [+ d, d' (u32), basis, mean, variances (f64)];
//         per mode m (u32) + eigenvalues (f64); sweeps (u32), seed (u64)

inline constexpr std::uint32_t kFormatVersion = 1;

enum class ArtifactKind { filter_bank, features, subspace_model };

std::string encode(const FilterBank& bank);
std::string encode(const FeatureTensor& tensor);
std::string encode(const SubspaceModel& model);

/// Identifies an artifact by its magic; `name` only labels errors.
ArtifactKind sniff(std::string_view bytes, const std::string& name = "artifact");

FilterBank decode_filter_bank(std::string_view bytes, const std::string& name = "artifact");
FeatureTensor decode_features(std::string_view bytes, const std::string& name = "artifact");
SubspaceModel decode_subspace_model(std::string_view bytes,
                                    const std::string& name = "artifact");

/// Atomic (temp file + rename).
void save(const FilterBank& bank, const std::filesystem::path& path);
void save(const FeatureTensor& tensor, const std::filesystem::path& path);
void save(const SubspaceModel& model, const std::filesystem::path& path);

FilterBank load_filter_bank(const std::filesystem::path& path);
FeatureTensor load_features(const std::filesystem::path& path);
SubspaceModel load_subspace_model(const std::filesystem::path& path);

}  // namespace kinverify
