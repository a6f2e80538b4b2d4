#pragma once

#include <filesystem>

#include "bytegan/corpus/manifest.hpp"
#include "bytegan/corpus/image.hpp"

namespace bytegan::corpus {

struct SynthOptions {
  int n_per_class = 200;
  int width = 32;
  uint64_t seed = 0;
  double gan_fraction = 0.30;
  double test_fraction = 0.70;
  std::filesystem::path out_dir;
};

// Deterministic byte stream for one synthetic sample. The benign class is a
// smooth low-frequency pattern (triangle waves over a ramp header); the
// malware class is bright high-frequency texture behind a fixed marker
// header. Integer arithmetic only, so streams are identical across platforms.
ByteStream synth_stream(Label label, int index, uint64_t seed);

// Generates n_per_class streams per label, images them at `width`, persists
// PGM files plus a manifest under out_dir, and assigns a held-out test split.
CorpusManifest synth_corpus(const SynthOptions& opt);

}  // namespace bytegan::corpus
