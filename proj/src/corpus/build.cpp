#include "bytegan/corpus/build.hpp"

#include <algorithm>
#include <fstream>

#include "bytegan/corpus/synth.hpp"
#include "bytegan/corpus/zip.hpp"
#include "bytegan/digest.hpp"
#include "bytegan/rng.hpp"

namespace bytegan::corpus {

namespace fs = std::filesystem;

std::map<std::string, Label> read_label_map(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) fail(Errc::IoFailure, "cannot open label file " + csv.string());
  std::map<std::string, Label> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail(Errc::FormatViolation, csv.string() + ":" + std::to_string(lineno) +
                                      ": expected filename,label");
    }
    std::string name = line.substr(0, comma);
    std::string label = line.substr(comma + 1);
    while (!label.empty() && (label.back() == '\r' || label.back() == ' ')) label.pop_back();
    out[name] = parse_label(label);
  }
  return out;
}

namespace {

std::vector<uint8_t> read_file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot open " + p.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

}  // namespace

BuildReport build_corpus(const BuildOptions& opt) {
  BuildReport report;
  CorpusManifest& m = report.manifest;
  m.seed = opt.seed;
  m.size_set = opt.size_set;
  m.created_at = now_utc_iso8601();
  fs::create_directories(opt.out_dir / "images");

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(opt.input_dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  for (const auto& file : files) {
    std::string fname = file.filename().string();
    auto lit = opt.labels.find(fname);
    if (lit == opt.labels.end()) {
      report.skipped.emplace_back(fname, "no label assigned");
      continue;
    }
    try {
      std::vector<uint8_t> bytes = read_file_bytes(file);
      std::vector<ByteStream> streams;
      if (looks_like_zip(bytes)) {
        streams = extract_streams(bytes, opt.source, fname);
      } else {
        streams = extract_streams(bytes, EntryKind::Raw, fname);
      }
      for (const auto& stream : streams) {
        for (int width : opt.size_set) {
          GrayImage img = bytes_to_image(stream, width, opt.resample);
          char name[512];
          snprintf(name, sizeof name, "%s__%s__w%d.pgm", file.stem().string().c_str(),
                   entry_kind_name(stream.entry_kind), width);
          fs::path out = opt.out_dir / "images" / name;
          write_image(img, out);
          SampleRecord r;
          r.image_path = out.string();
          r.label = lit->second;
          r.split = Split::Test;
          r.content_hash = hex(sha256_file(out));
          r.origin = Origin::Real;
          r.source_id = stream.source_id;
          r.image_size = width;
          m.records.push_back(std::move(r));
        }
      }
    } catch (const Error& e) {
      report.skipped.emplace_back(fname, e.what());
    }
  }

  // keep the first of any duplicated real content
  std::map<std::string, int> seen;
  std::vector<SampleRecord> kept;
  kept.reserve(m.records.size());
  for (auto& r : m.records) {
    if (r.origin == Origin::Real && ++seen[r.content_hash] > 1) {
      report.skipped.emplace_back(r.image_path, "duplicate content hash");
      continue;
    }
    kept.push_back(std::move(r));
  }
  m.records = std::move(kept);

  write_manifest(m, opt.out_dir / "manifest.jsonl");
  return report;
}

CorpusManifest perturb_corpus(const CorpusManifest& m, const fs::path& out_dir,
                              const PerturbApplyOptions& opt) {
  fs::create_directories(out_dir / "images");
  CorpusManifest out = m;

  for (Label label : {Label::Malware, Label::Benign}) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < m.records.size(); ++i) {
      if (m.records[i].origin == Origin::Real && m.records[i].label == label) idx.push_back(i);
    }
    Rng rng(opt.seed, fnv1a(std::string("perturb-select/") + label_name(label)));
    rng.shuffle(idx);
    size_t take = static_cast<size_t>(opt.fraction * static_cast<double>(idx.size()) + 0.5);
    idx.resize(std::min(take, idx.size()));

    for (size_t i : idx) {
      const SampleRecord& src = m.records[i];
      // synthetic-fixture streams regenerate exactly; anything else falls back
      // to the stored raster bytes as the stream
      ByteStream stream;
      if (src.source_id.rfind("synth:", 0) == 0) {
        auto slash = src.source_id.rfind('/');
        int index = std::stoi(src.source_id.substr(slash + 1));
        stream = synth_stream(src.label, index, m.seed);
      } else {
        GrayImage img = read_image(src.image_path);
        stream.bytes = img.pixels;
        stream.source_id = src.source_id;
      }
      ByteStream mutated = perturb_stream(stream, opt.kinds, opt.seed + i);
      GrayImage img = bytes_to_image(mutated, src.image_size);
      fs::path path = out_dir / "images" /
                      (fs::path(src.image_path).stem().string() + "_perturbed.pgm");
      write_image(img, path);

      SampleRecord r = src;
      r.image_path = path.string();
      r.content_hash = hex(sha256_file(path));
      r.origin = Origin::Perturbed;
      r.source_id = mutated.source_id;
      if (opt.replace) {
        for (auto& rec : out.records) {
          if (rec.image_path == src.image_path) {
            rec = r;
            break;
          }
        }
      } else {
        out.records.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace bytegan::corpus
