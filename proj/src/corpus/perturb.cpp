#include "bytegan/corpus/perturb.hpp"

#include <algorithm>

#include "bytegan/rng.hpp"

namespace bytegan::corpus {

const char* perturbation_name(Perturbation p) {
  switch (p) {
    case Perturbation::JunkInsertion: return "junk";
    case Perturbation::BlockReorder: return "reorder";
    case Perturbation::XorMask: return "xor";
    case Perturbation::SegmentEncryptStub: return "encrypt";
    case Perturbation::ByteRemap: return "remap";
  }
  return "?";
}

Perturbation parse_perturbation(const std::string& s) {
  if (s == "junk") return Perturbation::JunkInsertion;
  if (s == "reorder") return Perturbation::BlockReorder;
  if (s == "xor") return Perturbation::XorMask;
  if (s == "encrypt") return Perturbation::SegmentEncryptStub;
  if (s == "remap") return Perturbation::ByteRemap;
  fail(Errc::ConfigError, "unknown perturbation: " + s);
}

namespace {

void apply_junk(std::vector<uint8_t>& b, Rng& rng, int64_t junk_bytes) {
  const int64_t len = static_cast<int64_t>(b.size());
  int64_t k = junk_bytes >= 0 ? junk_bytes : len / 8 + 1;
  k = std::min(k, len);  // keeps the 2x length bound
  if (k <= 0) return;
  std::vector<size_t> offsets(static_cast<size_t>(k));
  for (auto& o : offsets) o = static_cast<size_t>(rng.next_below(static_cast<uint64_t>(len) + 1));
  std::sort(offsets.begin(), offsets.end());
  std::vector<uint8_t> out;
  out.reserve(b.size() + offsets.size());
  size_t oi = 0;
  for (size_t i = 0; i <= b.size(); ++i) {
    while (oi < offsets.size() && offsets[oi] == i) {
      out.push_back(static_cast<uint8_t>(rng.next_u64() & 0xff));
      ++oi;
    }
    if (i < b.size()) out.push_back(b[i]);
  }
  b = std::move(out);
}

void apply_reorder(std::vector<uint8_t>& b, Rng& rng, int64_t block_size) {
  const int64_t len = static_cast<int64_t>(b.size());
  int64_t bs = block_size >= 1 ? block_size
                               : std::max<int64_t>(1, len / (4 + static_cast<int64_t>(rng.next_below(12))));
  int64_t nblocks = (len + bs - 1) / bs;
  if (nblocks <= 1) return;
  std::vector<int64_t> order(static_cast<size_t>(nblocks));
  for (int64_t i = 0; i < nblocks; ++i) order[static_cast<size_t>(i)] = i;
  rng.shuffle(order);
  std::vector<uint8_t> out;
  out.reserve(b.size());
  for (int64_t blk : order) {
    int64_t lo = blk * bs;
    int64_t hi = std::min(len, lo + bs);
    out.insert(out.end(), b.begin() + lo, b.begin() + hi);
  }
  b = std::move(out);
}

void apply_xor(std::vector<uint8_t>& b, Rng& rng, int key) {
  uint8_t k = key >= 0 ? static_cast<uint8_t>(key) : static_cast<uint8_t>(1 + rng.next_below(255));
  for (auto& v : b) v = static_cast<uint8_t>(v ^ k);
}

void apply_encrypt_stub(std::vector<uint8_t>& b, Rng& rng) {
  const int64_t len = static_cast<int64_t>(b.size());
  if (len < 2) return;
  int64_t seg_len = std::max<int64_t>(1, len / 4);
  int64_t start = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(len - seg_len + 1)));
  for (int64_t i = 0; i < seg_len; ++i) {
    b[static_cast<size_t>(start + i)] ^= static_cast<uint8_t>(rng.next_u64() & 0xff);
  }
  // stub marker stamped in place over the stream head
  static const uint8_t marker[8] = {0x5A, 0x7E, 0x42, 0x47, 0x53, 0x54, 0x55, 0x42};
  for (int64_t i = 0; i < std::min<int64_t>(8, len); ++i) {
    b[static_cast<size_t>(i)] = marker[i];
  }
}

void apply_remap(std::vector<uint8_t>& b, Rng& rng, int shift) {
  // bijective relabeling of byte values; a pure shift when requested
  uint8_t table[256];
  if (shift >= 0) {
    for (int i = 0; i < 256; ++i) table[i] = static_cast<uint8_t>((i + shift) & 0xff);
  } else {
    for (int i = 0; i < 256; ++i) table[i] = static_cast<uint8_t>(i);
    for (int i = 256; i > 1; --i) {
      int j = static_cast<int>(rng.next_below(static_cast<uint64_t>(i)));
      std::swap(table[i - 1], table[j]);
    }
  }
  for (auto& v : b) v = table[v];
}

}  // namespace

ByteStream perturb_stream(const ByteStream& stream, const std::vector<Perturbation>& kinds,
                          uint64_t seed, const PerturbTuning& tuning) {
  if (stream.bytes.empty()) fail(Errc::EmptyStream, "cannot perturb an empty stream");
  if (kinds.empty()) fail(Errc::ConfigError, "at least one perturbation kind is required");

  ByteStream out;
  out.entry_kind = stream.entry_kind;
  out.bytes = stream.bytes;

  std::string tag;
  auto enabled = [&](Perturbation p) {
    return std::find(kinds.begin(), kinds.end(), p) != kinds.end();
  };

  // fixed application order keeps results independent of the list order
  for (Perturbation p : {Perturbation::JunkInsertion, Perturbation::BlockReorder,
                         Perturbation::XorMask, Perturbation::SegmentEncryptStub,
                         Perturbation::ByteRemap}) {
    if (!enabled(p)) continue;
    Rng rng(seed, fnv1a(std::string("perturb/") + perturbation_name(p)));
    switch (p) {
      case Perturbation::JunkInsertion: apply_junk(out.bytes, rng, tuning.junk_bytes); break;
      case Perturbation::BlockReorder: apply_reorder(out.bytes, rng, tuning.block_size); break;
      case Perturbation::XorMask: apply_xor(out.bytes, rng, tuning.xor_key); break;
      case Perturbation::SegmentEncryptStub: apply_encrypt_stub(out.bytes, rng); break;
      case Perturbation::ByteRemap: apply_remap(out.bytes, rng, tuning.remap_shift); break;
    }
    tag += std::string(tag.empty() ? "" : "+") + perturbation_name(p);
  }
  out.source_id = stream.source_id + "#" + tag;
  return out;
}

}  // namespace bytegan::corpus
