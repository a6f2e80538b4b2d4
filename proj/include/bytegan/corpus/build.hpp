#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bytegan/corpus/image.hpp"
#include "bytegan/corpus/manifest.hpp"
#include "bytegan/corpus/perturb.hpp"

namespace bytegan::corpus {

// filename (no directory) -> label; CSV lines of "filename,label"
std::map<std::string, Label> read_label_map(const std::filesystem::path& csv);

struct BuildOptions {
  std::filesystem::path input_dir;
  std::map<std::string, Label> labels;
  std::vector<int> size_set = {32, 64, 128, 256, 360, 400};
  EntryKind source = EntryKind::DexCode;  // applied to ZIP inputs; other files are Raw
  std::filesystem::path out_dir;
  uint64_t seed = 0;
  Resample resample = Resample::Linear;
};

struct BuildReport {
  CorpusManifest manifest;
  std::vector<std::pair<std::string, std::string>> skipped;  // (file, reason)
};

// One image per (file, width). Failures are recorded and skipped, never fatal.
BuildReport build_corpus(const BuildOptions& opt);

struct PerturbApplyOptions {
  std::vector<Perturbation> kinds{Perturbation::JunkInsertion, Perturbation::BlockReorder,
                                  Perturbation::XorMask, Perturbation::SegmentEncryptStub,
                                  Perturbation::ByteRemap};
  uint64_t seed = 0;
  bool replace = false;  // duplicate (default) or replace originals
  double fraction = 0.5;
};

// Re-images a perturbed variant of a fraction of the real records, mirroring
// an obfuscation pass over part of the corpus.
CorpusManifest perturb_corpus(const CorpusManifest& m, const std::filesystem::path& out_dir,
                              const PerturbApplyOptions& opt);

}  // namespace bytegan::corpus
