#pragma once

#include <cstdint>
#include <string>

#include "dmg/datagen.hpp"

namespace dmg {

/// Container schema version understood by this build.
inline constexpr std::uint32_t kSchemaVersion = 1;

/// FNV-1a 64-bit hash (used for task-spec fingerprints in file preambles).
std::uint64_t fnv1a64(const std::string& bytes);

/// Path of the JSON sidecar index written next to a generated dataset.
std::string sidecar_path(const std::string& dataset_path);

/// Writes a source dataset (task spec, annotated demos) to `path`.
/// The byte stream is a pure function of the dataset contents.
void write_source(const SourceDataset& src, const std::string& path);

/// Reads a source dataset back. Throws IoError (bad magic/layout/kind),
/// SchemaVersionMismatchError, or ChecksumMismatchError.
SourceDataset read_source(const std::string& path);

/// Writes a generated dataset to `path` and its JSON sidecar index (record
/// byte offsets, outcomes, DGR, and the per-(demo, segment) DMP parameters)
/// to sidecar_path(path). Deterministic: equal datasets produce
/// byte-identical files.
void write_generated(const GeneratedDataset& ds, const std::string& path);

/// Reads a generated dataset back (the container holds everything the
/// sidecar summarizes, so the sidecar is not required for reading).
GeneratedDataset read_generated(const std::string& path);

/// Structural equality of two generated datasets (spec JSON, counters,
/// records compared field-by-field with exact floating-point equality).
bool datasets_equal(const GeneratedDataset& a, const GeneratedDataset& b);

}  // namespace dmg
