#pragma once

#include <string>

#include <json.hpp>

#include "kinverify/cli/config.hpp"
#include "kinverify/pipeline.hpp"

namespace kinverify::cli {

/// Published Cornell KinFace mean accuracy of the colour MS-BSIF method;
/// shown next to results for orientation only.
inline constexpr double kReferenceAccuracy = 80.53;
inline constexpr const char* kReferenceMethod = "Color MS-BSIF Learning";

/// Full report: resolved config (seeds included), per-fold and mean results,
/// pooled ROC/EER, relation shares. Contains nothing run-dependent, so equal
/// configs give byte-identical dumps.
nlohmann::ordered_json report_json(const CvResult& result, const RunConfig& config);

/// Method / Mean table followed by per-relation accuracy and EER.
std::string table_text(const CvResult& result, const RunConfig& config);

/// Per-fold test ids and training-stage entries, plus any leaks found.
nlohmann::ordered_json audit_json(const CvResult& result);

}  // namespace kinverify::cli
