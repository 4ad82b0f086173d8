#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace imti {

enum class Split { train, val, test };

const char* split_name(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string id;
  std::filesystem::path embedding_path;
  std::optional<std::filesystem::path> waveform_path;
  double intelligibility = 0.0;  // [0, 1]
  double cer_whisper = 0.0;      // raw CER, >= 0
  double cer_google = 0.0;       // raw CER, >= 0
  double stoi = 0.0;             // [0, 1]
  Split split = Split::train;
};

// JSON-Lines, one object per line; blank lines are allowed. Relative paths
// are resolved against the manifest's directory. Duplicate ids, missing
// fields, unknown fields, and out-of-range labels are all rejected.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

// CER is an error rate; the regression target is the inverted score
// max(0, 1 - cer), clipped so CER > 1 does not leave [0, 1].
double invert_cer(double cer);

}  // namespace imti
