#include "dub/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dub/errors.hpp"

namespace dub {

std::string photons_tag(double photons) {
  return std::to_string(std::llround(photons));
}

std::string clean_filename(const std::string& stem) {
  return stem + ".clean.f32";
}

std::string noisy_filename(const std::string& stem, double photons) {
  return stem + ".n" + photons_tag(photons) + ".f32";
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestRow>& rows) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << "stem,photons,seed,mode\n";
  for (const ManifestRow& r : rows)
    os << r.stem << "," << photons_tag(r.photons) << "," << r.seed << ","
       << r.mode << "\n";
  if (!os) throw DataError("write failed for " + path);
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest " + path);
  std::string line;
  if (!std::getline(is, line) || line != "stem,photons,seed,mode")
    throw DataError(path + " is not a simulation manifest (bad header)");
  std::vector<ManifestRow> rows;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestRow r;
    std::string photons, seed;
    if (!std::getline(ss, r.stem, ',') || !std::getline(ss, photons, ',') ||
        !std::getline(ss, seed, ',') || !std::getline(ss, r.mode))
      throw DataError("malformed manifest line " + std::to_string(line_no) +
                      " in " + path);
    try {
      r.photons = std::stod(photons);
      r.seed = std::stoull(seed);
    } catch (const std::exception&) {
      throw DataError("malformed manifest line " + std::to_string(line_no) +
                      " in " + path);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> manifest_stems(const std::vector<ManifestRow>& rows) {
  std::vector<std::string> stems;
  for (const ManifestRow& r : rows)
    if (std::find(stems.begin(), stems.end(), r.stem) == stems.end())
      stems.push_back(r.stem);
  return stems;
}

std::vector<TrainPair> load_pairs(const std::string& manifest_path,
                                  double photons) {
  const std::vector<ManifestRow> rows = read_manifest(manifest_path);
  const std::filesystem::path dir =
      std::filesystem::path(manifest_path).parent_path();
  std::vector<TrainPair> pairs;
  for (const ManifestRow& r : rows) {
    if (std::llround(r.photons) != std::llround(photons)) continue;
    TrainPair p;
    p.noisy = read_image((dir / noisy_filename(r.stem, photons)).string());
    p.clean = read_image((dir / clean_filename(r.stem)).string());
    pairs.push_back(std::move(p));
  }
  if (pairs.empty())
    throw DataError("manifest " + manifest_path + " has no rows at " +
                    photons_tag(photons) + " photons");
  return pairs;
}

}  // namespace dub
