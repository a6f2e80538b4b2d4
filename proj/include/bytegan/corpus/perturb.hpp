#pragma once

#include <cstdint>
#include <vector>

#include "bytegan/corpus/image.hpp"

namespace bytegan::corpus {

enum class Perturbation {
  JunkInsertion,       // inserts junk bytes at random offsets
  BlockReorder,        // permutes fixed-size blocks
  XorMask,             // xors every byte with a key
  SegmentEncryptStub,  // keystream-encrypts one segment and stamps a stub marker
  ByteRemap,           // bijective byte-value relabeling
};

const char* perturbation_name(Perturbation p);
Perturbation parse_perturbation(const std::string& s);

// Optional overrides for individual techniques; negative fields derive their
// value from the seed.
struct PerturbTuning {
  int64_t junk_bytes = -1;
  int64_t block_size = -1;
  int xor_key = -1;
  int remap_shift = -1;
};

// Applies the selected techniques in enum order. Output length stays within
// 2x the input; only JunkInsertion changes length at all.
ByteStream perturb_stream(const ByteStream& stream, const std::vector<Perturbation>& kinds,
                          uint64_t seed, const PerturbTuning& tuning = {});

}  // namespace bytegan::corpus
