#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dub/training.hpp"

namespace dub {

// One simulated dose of one image. The files live next to the manifest:
// "<stem>.clean.f32" and "<stem>.n<photons>.f32", both DUB1 rank-2.
struct ManifestRow {
  std::string stem;
  double photons = 0.0;
  uint64_t seed = 0;
  std::string mode;
};

std::string photons_tag(double photons);  // integral photon counts, e.g. "100000"
std::string clean_filename(const std::string& stem);
std::string noisy_filename(const std::string& stem, double photons);

// CSV with header "stem,photons,seed,mode".
void write_manifest(const std::string& path,
                    const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::string& path);

// Unique stems in first-appearance order.
std::vector<std::string> manifest_stems(const std::vector<ManifestRow>& rows);

// (noisy at the given dose, clean) pairs in manifest order; paths are
// resolved relative to the manifest's directory.
std::vector<TrainPair> load_pairs(const std::string& manifest_path,
                                  double photons);

}  // namespace dub
