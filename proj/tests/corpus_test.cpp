#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <numeric>

#include "bytegan/corpus/build.hpp"
#include "bytegan/corpus/image.hpp"
#include "bytegan/corpus/manifest.hpp"
#include "bytegan/corpus/perturb.hpp"
#include "bytegan/corpus/synth.hpp"
#include "bytegan/corpus/zip.hpp"
#include "bytegan/digest.hpp"
#include "bytegan/rng.hpp"
#include "doctest.h"
#include "support/tmpdir.hpp"
#include "support/zip_writer.hpp"

using namespace bytegan;
using namespace bytegan::corpus;
using bytegan::testing::TmpDir;
using bytegan::testing::ZipWriter;

namespace {

ByteStream make_stream(std::vector<uint8_t> bytes) {
  ByteStream s;
  s.bytes = std::move(bytes);
  s.source_id = "test";
  return s;
}

}  // namespace

TEST_CASE("identity-length resampling copies bytes row-major") {
  ByteStream s = make_stream({10, 20, 30, 40, 50, 60, 70, 80, 90});
  GrayImage img = bytes_to_image(s, 3);
  CHECK(img.pixels == std::vector<uint8_t>{10, 20, 30, 40, 50, 60, 70, 80, 90});
}

TEST_CASE("two-byte stream to width 2 interpolates to 0,85,170,255") {
  GrayImage img = bytes_to_image(make_stream({0, 255}), 2);
  CHECK(img.pixels == std::vector<uint8_t>{0, 85, 170, 255});
}

TEST_CASE("constant streams image to constant rasters") {
  for (int width : {2, 3, 7}) {
    for (size_t len : {size_t(1), size_t(5), size_t(1000)}) {
      GrayImage img = bytes_to_image(make_stream(std::vector<uint8_t>(len, 7)), width);
      for (uint8_t p : img.pixels) CHECK(p == 7);
    }
  }
}

TEST_CASE("resampling endpoints and range") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    size_t len = 2 + rng.next_below(5000);
    std::vector<uint8_t> bytes(len);
    for (auto& b : bytes) b = static_cast<uint8_t>(rng.next_u64() & 0xff);
    int width = 2 + static_cast<int>(rng.next_below(40));
    GrayImage img = bytes_to_image(make_stream(bytes), width);
    CHECK(img.pixels.front() == bytes.front());
    CHECK(img.pixels.back() == bytes.back());
    auto [lo, hi] = std::minmax_element(bytes.begin(), bytes.end());
    for (uint8_t p : img.pixels) {
      CHECK(p >= *lo);
      CHECK(p <= *hi);
    }
  }
}

TEST_CASE("empty stream is an error") {
  CHECK_THROWS_WITH_AS((void)bytes_to_image(make_stream({}), 4),
                       doctest::Contains("EmptyStream"), Error);
}

TEST_CASE("pgm write produces header plus exactly the raster bytes") {
  GrayImage img;
  img.width = 2;
  img.height = 2;
  img.pixels = {0, 1, 2, 3};
  auto bytes = encode_pgm(img);
  REQUIRE(bytes.size() == 15);
  std::string header(bytes.begin(), bytes.begin() + 11);
  CHECK(header == "P5\n2 2\n255\n");
  CHECK(std::vector<uint8_t>(bytes.begin() + 11, bytes.end()) ==
        std::vector<uint8_t>{0, 1, 2, 3});
}

TEST_CASE("pgm round trip is bit exact") {
  TmpDir tmp("pgm");
  Rng rng(9);
  GrayImage img;
  img.width = 17;
  img.height = 17;
  img.pixels.resize(17 * 17);
  for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.next_u64() & 0xff);
  auto path = tmp / "a.pgm";
  write_image(img, path);
  CHECK(read_image(path) == img);
}

TEST_CASE("pgm with wrong maxval is a format violation") {
  TmpDir tmp("pgm_bad");
  auto path = tmp / "bad.pgm";
  std::ofstream(path) << "P5\n2 1\n127\n\0\0";
  CHECK_THROWS_WITH_AS((void)read_image(path), doctest::Contains("FormatViolation"), Error);
}

TEST_CASE("dex entries concatenate in natural numeric order") {
  ZipWriter zw;
  zw.add("classes10.dex", {10});
  zw.add("classes.dex", {1, 2});
  zw.add("classes2.dex", {3});
  zw.add("resources.arsc", {99});
  auto streams = extract_streams(zw.finish(), EntryKind::DexCode, "a.apk");
  REQUIRE(streams.size() == 1);
  CHECK(streams[0].bytes == std::vector<uint8_t>{1, 2, 3, 10});
  CHECK(streams[0].source_id == "a.apk!classes.dex+classes2.dex+classes10.dex");
}

TEST_CASE("missing dex entries raise NoMatchingEntry") {
  ZipWriter zw;
  zw.add("assets/foo.txt", {1});
  CHECK_THROWS_WITH_AS((void)extract_streams(zw.finish(), EntryKind::DexCode, "a.apk"),
                       doctest::Contains("NoMatchingEntry"), Error);
}

TEST_CASE("manifest selector passes raw AndroidManifest.xml bytes through") {
  ZipWriter zw;
  zw.add("AndroidManifest.xml", {9, 9});
  zw.add("classes.dex", {1});
  auto streams = extract_streams(zw.finish(), EntryKind::Manifest, "a.apk");
  REQUIRE(streams.size() == 1);
  CHECK(streams[0].bytes == std::vector<uint8_t>{9, 9});
}

TEST_CASE("non-zip bytes raise MalformedArchive") {
  std::vector<uint8_t> junk{'n', 'o', 't', 'a', 'z', 'i', 'p'};
  CHECK_THROWS_WITH_AS((void)read_zip(junk, "junk"), doctest::Contains("MalformedArchive"),
                       Error);
}

TEST_CASE("deflated zip entries inflate and verify CRC") {
  // produced by a standard zip implementation; re-pack via zlib here
  std::vector<uint8_t> payload(2048);
  Rng rng(4);
  for (auto& b : payload) b = static_cast<uint8_t>(rng.next_below(7));

  // deflate raw
  std::vector<uint8_t> comp(compressBound(payload.size()) + 64);
  z_stream zs{};
  REQUIRE(deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) == Z_OK);
  zs.next_in = payload.data();
  zs.avail_in = static_cast<uInt>(payload.size());
  zs.next_out = comp.data();
  zs.avail_out = static_cast<uInt>(comp.size());
  REQUIRE(deflate(&zs, Z_FINISH) == Z_STREAM_END);
  comp.resize(zs.total_out);
  deflateEnd(&zs);

  // hand-assemble a zip with one deflated entry
  std::vector<uint8_t> z;
  auto put16 = [&](uint16_t v) {
    z.push_back(v & 0xff);
    z.push_back(v >> 8);
  };
  auto put32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) z.push_back((v >> (8 * i)) & 0xff);
  };
  uint32_t crc = static_cast<uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), payload.data(), static_cast<uInt>(payload.size())));
  std::string name = "classes.dex";
  put32(0x04034b50), put16(20), put16(0), put16(8), put16(0), put16(0);
  put32(crc), put32(static_cast<uint32_t>(comp.size())), put32(static_cast<uint32_t>(payload.size()));
  put16(static_cast<uint16_t>(name.size())), put16(0);
  z.insert(z.end(), name.begin(), name.end());
  z.insert(z.end(), comp.begin(), comp.end());
  uint32_t cd = static_cast<uint32_t>(z.size());
  put32(0x02014b50), put16(20), put16(20), put16(0), put16(8), put16(0), put16(0);
  put32(crc), put32(static_cast<uint32_t>(comp.size())), put32(static_cast<uint32_t>(payload.size()));
  put16(static_cast<uint16_t>(name.size())), put16(0), put16(0), put16(0), put16(0), put32(0),
      put32(0);
  z.insert(z.end(), name.begin(), name.end());
  uint32_t cd_size = static_cast<uint32_t>(z.size()) - cd;
  put32(0x06054b50), put16(0), put16(0), put16(1), put16(1), put32(cd_size), put32(cd), put16(0);

  auto streams = extract_streams(z, EntryKind::DexCode, "deflated.apk");
  REQUIRE(streams.size() == 1);
  CHECK(streams[0].bytes == payload);
}

TEST_CASE("manifest json-lines round trip") {
  TmpDir tmp("manifest");
  CorpusManifest m;
  m.seed = 77;
  m.size_set = {32, 64};
  m.created_at = "2026-01-01T00:00:00Z";
  SampleRecord r;
  r.image_path = "x/a.pgm";
  r.label = Label::Malware;
  r.split = Split::GanTrain;
  r.content_hash = std::string(64, 'a');
  r.origin = Origin::Real;
  r.source_id = "a.apk!classes.dex";
  r.image_size = 32;
  m.records.push_back(r);
  auto path = tmp / "m.jsonl";
  write_manifest(m, path);
  CorpusManifest back = read_manifest(path);
  CHECK(back.seed == 77);
  CHECK(back.size_set == std::vector<int>{32, 64});
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0].image_path == "x/a.pgm");
  CHECK(back.records[0].label == Label::Malware);
  CHECK(back.records[0].split == Split::GanTrain);
  CHECK(back.records[0].image_size == 32);
}

TEST_CASE("stratified split: 100+100 at 0.3 gives 30+30 gan_train and 70+70 test") {
  CorpusManifest m;
  for (int i = 0; i < 100; ++i) {
    SampleRecord r;
    r.image_path = "m" + std::to_string(i);
    r.label = Label::Malware;
    r.origin = Origin::Real;
    m.records.push_back(r);
    r.image_path = "b" + std::to_string(i);
    r.label = Label::Benign;
    m.records.push_back(r);
  }
  SplitOptions so;
  so.gan_fraction = 0.3;
  so.test_fraction = 0.7;
  so.seed = 5;
  CorpusManifest out = split_corpus(m, so);
  CHECK(select(out, Label::Malware, Split::GanTrain).size() == 30);
  CHECK(select(out, Label::Benign, Split::GanTrain).size() == 30);
  CHECK(select(out, Label::Malware, Split::Test).size() == 70);
  CHECK(select(out, Label::Benign, Split::Test).size() == 70);
  CHECK(select_split(out, Split::ClassifierTrain).empty());

  CorpusManifest again = split_corpus(m, so);
  for (size_t i = 0; i < out.records.size(); ++i) {
    CHECK(out.records[i].split == again.records[i].split);
  }
}

TEST_CASE("fractions beyond 1 are rejected") {
  CorpusManifest m;
  SampleRecord r;
  r.origin = Origin::Real;
  m.records.push_back(r);
  SplitOptions so;
  so.gan_fraction = 0.35;
  so.test_fraction = 0.75;
  CHECK_THROWS_WITH_AS((void)split_corpus(m, so), doctest::Contains("InsufficientSamples"),
                       Error);
}

TEST_CASE("a class too small to fill a cell is rejected") {
  CorpusManifest m;
  SampleRecord r;
  r.origin = Origin::Real;
  r.label = Label::Malware;
  r.image_path = "only";
  m.records.push_back(r);
  SplitOptions so;
  so.gan_fraction = 0.3;
  so.test_fraction = 0.7;
  CHECK_THROWS_WITH_AS((void)split_corpus(m, so), doctest::Contains("InsufficientSamples"),
                       Error);
}

TEST_CASE("xor mask with key 0 is the identity") {
  ByteStream s = make_stream({1, 2, 3, 4, 5});
  PerturbTuning t;
  t.xor_key = 0;
  ByteStream out = perturb_stream(s, {Perturbation::XorMask}, 9, t);
  CHECK(out.bytes == s.bytes);
}

TEST_CASE("junk insertion adds exactly k bytes") {
  ByteStream s = make_stream(std::vector<uint8_t>(100, 1));
  PerturbTuning t;
  t.junk_bytes = 17;
  ByteStream out = perturb_stream(s, {Perturbation::JunkInsertion}, 3, t);
  CHECK(out.bytes.size() == 117);
  CHECK(s.bytes.size() == 100);  // original untouched
}

TEST_CASE("block reorder with block size = length is the identity") {
  ByteStream s = make_stream({5, 4, 3, 2, 1});
  PerturbTuning t;
  t.block_size = 5;
  ByteStream out = perturb_stream(s, {Perturbation::BlockReorder}, 3, t);
  CHECK(out.bytes == s.bytes);
}

TEST_CASE("perturbation output stays within 2x length, is deterministic, and images fine") {
  Rng rng(12);
  std::vector<Perturbation> all{Perturbation::JunkInsertion, Perturbation::BlockReorder,
                                Perturbation::XorMask, Perturbation::SegmentEncryptStub,
                                Perturbation::ByteRemap};
  for (int trial = 0; trial < 20; ++trial) {
    size_t len = 1 + rng.next_below(4096);
    std::vector<uint8_t> bytes(len);
    for (auto& b : bytes) b = static_cast<uint8_t>(rng.next_u64() & 0xff);
    ByteStream s = make_stream(bytes);
    ByteStream a = perturb_stream(s, all, trial);
    ByteStream b = perturb_stream(s, all, trial);
    CHECK(a.bytes == b.bytes);
    CHECK(a.bytes.size() >= 1);
    CHECK(a.bytes.size() <= 2 * len);
    GrayImage img = bytes_to_image(a, 16);
    CHECK(img.pixels.size() == 256);
  }
}

TEST_CASE("build_corpus images every labeled file at every size and skips bad ones") {
  TmpDir tmp("build");
  std::filesystem::create_directories(tmp / "in");
  Rng rng(1);
  std::map<std::string, Label> labels;
  for (int i = 0; i < 4; ++i) {
    ZipWriter zw;
    std::vector<uint8_t> dex(256 + i);
    for (auto& b : dex) b = static_cast<uint8_t>(rng.next_u64() & 0xff);
    zw.add("classes.dex", dex);
    auto z = zw.finish();
    std::string name = "app" + std::to_string(i) + ".apk";
    std::ofstream(tmp / "in" / name, std::ios::binary)
        .write(reinterpret_cast<const char*>(z.data()), static_cast<int64_t>(z.size()));
    labels[name] = i % 2 ? Label::Malware : Label::Benign;
  }
  // one corrupt archive
  std::ofstream(tmp / "in" / "broken.apk", std::ios::binary) << "PK\x03\x04 nope";
  labels["broken.apk"] = Label::Malware;

  BuildOptions opt;
  opt.input_dir = tmp / "in";
  opt.labels = labels;
  opt.size_set = {32, 64};
  opt.out_dir = tmp / "out";
  opt.seed = 11;
  BuildReport rep = build_corpus(opt);
  CHECK(rep.manifest.records.size() == 8);  // 4 files x 2 sizes
  REQUIRE(rep.skipped.size() == 1);
  CHECK(rep.skipped[0].first == "broken.apk");

  // determinism: identical inputs and seed give identical hashes
  BuildOptions opt2 = opt;
  opt2.out_dir = tmp / "out2";
  BuildReport rep2 = build_corpus(opt2);
  REQUIRE(rep2.manifest.records.size() == rep.manifest.records.size());
  for (size_t i = 0; i < rep.manifest.records.size(); ++i) {
    CHECK(rep.manifest.records[i].content_hash == rep2.manifest.records[i].content_hash);
  }
}

TEST_CASE("synth corpus is deterministic with the documented cardinality") {
  TmpDir tmp("synth");
  SynthOptions opt;
  opt.n_per_class = 50;
  opt.width = 32;
  opt.seed = 21;
  opt.out_dir = tmp / "c1";
  CorpusManifest a = synth_corpus(opt);
  CHECK(a.records.size() == 100);
  CHECK(select(a, Label::Malware, Split::GanTrain).size() == 15);
  CHECK(select(a, Label::Malware, Split::Test).size() == 35);

  opt.out_dir = tmp / "c2";
  CorpusManifest b = synth_corpus(opt);
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].content_hash == b.records[i].content_hash);
    CHECK(a.records[i].split == b.records[i].split);
  }
}

TEST_CASE("synthetic classes differ visibly in mean brightness") {
  double mal = 0.0, ben = 0.0;
  const int n = 20;
  for (int i = 0; i < n; ++i) {
    auto img_m = bytes_to_image(synth_stream(Label::Malware, i, 3), 32);
    auto img_b = bytes_to_image(synth_stream(Label::Benign, i, 3), 32);
    mal += std::accumulate(img_m.pixels.begin(), img_m.pixels.end(), 0.0) / img_m.pixels.size();
    ben += std::accumulate(img_b.pixels.begin(), img_b.pixels.end(), 0.0) / img_b.pixels.size();
  }
  mal /= n;
  ben /= n;
  CHECK(mal - ben > 20.0);
}
