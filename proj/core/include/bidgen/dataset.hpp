#pragma once

#include <string>

#include "bidgen/types.hpp"

namespace bidgen {

/// Dataset file layout (JSON lines):
///   line 1      header: format tag, version, trajectory count, stored stats
///   lines 2..n  one trajectory per line
///   last line   footer: record count + FNV-1a checksum of the record lines
///
/// Loading is all-or-nothing: any structural failure leaves the caller's
/// dataset untouched. Distinct errors: version_mismatch, truncated_file,
/// checksum_failure, stats_mismatch.
void dataset_save(const TrajectoryDataset& ds, const std::string& path);
TrajectoryDataset dataset_load(const std::string& path);

inline constexpr int kDatasetVersion = 1;
inline constexpr const char* kDatasetFormatTag = "bidgen-dataset";

}  // namespace bidgen
