#include "bytegan/corpus/synth.hpp"

#include "bytegan/digest.hpp"
#include "bytegan/rng.hpp"

namespace bytegan::corpus {

namespace {

uint8_t clamp_byte(int64_t v) {
  if (v < 0) return 0;
  if (v > 255) return 255;
  return static_cast<uint8_t>(v);
}

}  // namespace

ByteStream synth_stream(Label label, int index, uint64_t seed) {
  const uint64_t stream = fnv1a(std::string("synth/") + label_name(label));
  auto h = [&](uint64_t k) { return rng_at(seed, stream, static_cast<uint64_t>(index) * 64 + k); };
  auto noise = [&](int64_t i) {
    return rng_at(seed, stream ^ 0x6e6f697365ULL, static_cast<uint64_t>(index) * (1ULL << 20) +
                                                      static_cast<uint64_t>(i));
  };

  ByteStream s;
  s.entry_kind = EntryKind::Raw;
  s.source_id = std::string("synth:") + label_name(label) + "/" + std::to_string(index);
  const int64_t len = 3000 + static_cast<int64_t>(h(0) % 2049);
  s.bytes.resize(static_cast<size_t>(len));

  if (label == Label::Benign) {
    // ramp header then slow triangle waves with gentle jitter
    const int64_t period = 256 + static_cast<int64_t>(h(1) % 257);
    const int64_t phase = static_cast<int64_t>(h(2) % static_cast<uint64_t>(period));
    const int64_t base = 70 + static_cast<int64_t>(h(3) % 41);   // 70..110
    const int64_t amp = 50 + static_cast<int64_t>(h(4) % 31);    // 50..80
    for (int64_t i = 0; i < len; ++i) {
      if (i < 16) {
        s.bytes[static_cast<size_t>(i)] = static_cast<uint8_t>(i * 8);
        continue;
      }
      int64_t pos = (i + phase) % period;
      int64_t half = period / 2;
      int64_t tri = pos < half ? pos : period - pos;  // 0..half
      int64_t v = base + amp * tri / half + static_cast<int64_t>(noise(i) % 9) - 4;
      s.bytes[static_cast<size_t>(i)] = clamp_byte(v);
    }
  } else {
    // marker header then bright high-frequency texture
    static const uint8_t marker[8] = {0xD3, 0xAD, 0xC0, 0xDE, 0xD3, 0xAD, 0xC0, 0xDE};
    const int64_t base = 150 + static_cast<int64_t>(h(1) % 41);  // 150..190
    const int64_t sq_period = 2 + static_cast<int64_t>(h(2) % 3);
    const int64_t sq_amp = 30 + static_cast<int64_t>(h(3) % 31);
    for (int64_t i = 0; i < len; ++i) {
      if (i < 16) {
        s.bytes[static_cast<size_t>(i)] = marker[i % 8];
        continue;
      }
      int64_t jitter = static_cast<int64_t>((noise(i) >> 5) & 0x3F) - 32;  // -32..31
      int64_t sq = ((i / sq_period) % 2 == 0) ? sq_amp : -sq_amp;
      s.bytes[static_cast<size_t>(i)] = clamp_byte(base + jitter + sq);
    }
  }
  return s;
}

CorpusManifest synth_corpus(const SynthOptions& opt) {
  if (opt.n_per_class < 20) fail(Errc::ConfigError, "n_per_class must be at least 20");
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir / "images");

  CorpusManifest m;
  m.seed = opt.seed;
  m.size_set = {opt.width};
  m.created_at = now_utc_iso8601();

  for (Label label : {Label::Malware, Label::Benign}) {
    for (int i = 0; i < opt.n_per_class; ++i) {
      ByteStream stream = synth_stream(label, i, opt.seed);
      GrayImage img = bytes_to_image(stream, opt.width);
      char name[128];
      snprintf(name, sizeof name, "%s_%04d_w%d.pgm", label_name(label), i, opt.width);
      fs::path path = opt.out_dir / "images" / name;
      write_image(img, path);
      SampleRecord r;
      r.image_path = path.string();
      r.label = label;
      r.split = Split::Test;
      r.content_hash = hex(sha256_file(path));
      r.origin = Origin::Real;
      r.source_id = stream.source_id;
      r.image_size = opt.width;
      m.records.push_back(std::move(r));
    }
  }

  SplitOptions so;
  so.gan_fraction = opt.gan_fraction;
  so.test_fraction = opt.test_fraction;
  so.seed = opt.seed;
  m = split_corpus(m, so);
  write_manifest(m, opt.out_dir / "manifest.jsonl");
  return m;
}

}  // namespace bytegan::corpus
