#include "glia/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "glia/errors.hpp"

namespace glia {

std::string ManifestEntry::group() const {
  const std::string name = std::filesystem::path(path).filename().string();
  const auto cut = name.find("__");
  return cut == std::string::npos ? path : name.substr(0, cut);
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.path).second) {
      throw FormatError("manifest: duplicate path " + e.path);
    }
    if (e.mos < score_min || e.mos > score_max) {
      throw FormatError("manifest: score " + std::to_string(e.mos) + " of " + e.path +
                        " outside score range");
    }
  }
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string render_manifest(const DatasetManifest& manifest) {
  std::string out = "path,mos,split\n";
  for (const auto& e : manifest.entries) {
    if (e.path.find(',') != std::string::npos || e.split.find(',') != std::string::npos) {
      throw FormatError("manifest: commas are not allowed in paths or tags: " + e.path);
    }
    out += e.path + "," + format_double(e.mos) + "," + e.split + "\n";
  }
  return out;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write manifest " + path.string());
  }
  out << render_manifest(manifest);
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open manifest " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line != "path,mos,split") {
    throw FormatError(path.string() + ": expected header 'path,mos,split'");
  }
  DatasetManifest m;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected three comma-separated fields");
    }
    ManifestEntry e;
    e.path = line.substr(0, c1);
    const std::string mos = line.substr(c1 + 1, c2 - c1 - 1);
    auto res = std::from_chars(mos.data(), mos.data() + mos.size(), e.mos);
    if (res.ec != std::errc() || res.ptr != mos.data() + mos.size()) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad score '" + mos +
                        "'");
    }
    e.split = line.substr(c2 + 1);
    m.entries.push_back(std::move(e));
  }
  if (!m.entries.empty()) {
    auto [lo, hi] = std::minmax_element(
        m.entries.begin(), m.entries.end(),
        [](const ManifestEntry& a, const ManifestEntry& b) { return a.mos < b.mos; });
    m.score_min = lo->mos;
    m.score_max = hi->mos;
  }
  m.validate();
  return m;
}

double synthetic_mos(int level, int max_level, double score_min, double score_max) {
  const double v = static_cast<double>(max_level + 1 - level);  // in [1, max_level + 1]
  return score_min + (score_max - score_min) * (v - 1.0) / static_cast<double>(max_level);
}

SynthDataset build_synth_manifest(const std::vector<NamedImage>& sources,
                                  const std::vector<Distortion>& kinds, int max_level,
                                  std::uint64_t seed, double score_min, double score_max) {
  if (sources.empty()) {
    throw ParameterError("build_synth_manifest: no source images");
  }
  if (max_level < 1 || max_level > kMaxDistortionLevel) {
    throw ParameterError("build_synth_manifest: level count " + std::to_string(max_level) +
                         " outside 1.." + std::to_string(kMaxDistortionLevel));
  }
  if (!(score_min < score_max)) {
    throw ParameterError("build_synth_manifest: empty score range");
  }
  SynthDataset out;
  out.manifest.score_min = score_min;
  out.manifest.score_max = score_max;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& src = sources[s];
    out.manifest.entries.push_back(
        {src.name + "__pristine.ppm", synthetic_mos(0, max_level, score_min, score_max), "any"});
    out.images.push_back(src.image);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      for (int level = 1; level <= max_level; ++level) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(kinds[k]),
                          static_cast<std::uint32_t>(level)};
        std::uint32_t words[2];
        seq.generate(words, words + 2);
        const std::uint64_t entry_seed = (std::uint64_t{words[0]} << 32) | words[1];
        out.images.push_back(synth_distort(src.image, kinds[k], level, entry_seed));
        out.manifest.entries.push_back(
            {src.name + "__" + std::string(distortion_name(kinds[k])) + "_" +
                 std::to_string(level) + ".ppm",
             synthetic_mos(level, max_level, score_min, score_max), "any"});
      }
    }
  }
  out.manifest.validate();
  return out;
}

void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    save_image(data.images[i], dir / data.manifest.entries[i].path);
  }
  write_manifest(data.manifest, dir / "manifest.csv");
}

}  // namespace glia
