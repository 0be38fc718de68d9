#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "glia/image.hpp"

namespace glia {

struct ManifestEntry {
  std::string path;
  double mos = 0.0;
  std::string split = "any";

  // Content group for leakage-free splitting: the file name up to the first
  // "__" (all synthetic variants of one source share it), else the path.
  std::string group() const;
  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  double score_min = 0.0;
  double score_max = 1.0;

  // Unique paths, every score inside [score_min, score_max].
  void validate() const;
};

// CSV with header `path,mos,split`, LF line endings. The score range of a
// loaded manifest is the observed [min, max] of its scores.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
std::string render_manifest(const DatasetManifest& manifest);

struct NamedImage {
  std::string name;
  Image image;
};

struct SynthDataset {
  DatasetManifest manifest;
  std::vector<Image> images;  // parallel to manifest.entries
};

// Synthetic MOS for a distortion level (0 = pristine) out of `max_level`:
// (max_level + 1 - level) mapped linearly so pristine lands on score_max and
// max_level on score_min.
double synthetic_mos(int level, int max_level, double score_min, double score_max);

// One pristine entry per source plus one entry per (source, kind, level),
// levels 1..max_level. Entry paths are `<name>__pristine.ppm` and
// `<name>__<kind>_<level>.ppm`.
SynthDataset build_synth_manifest(const std::vector<NamedImage>& sources,
                                  const std::vector<Distortion>& kinds, int max_level,
                                  std::uint64_t seed, double score_min = 0.0,
                                  double score_max = 1.0);

// Writes every image next to the manifest (`dir/manifest.csv`).
void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& dir);

}  // namespace glia
