#include "bytegan/corpus/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>

#include "bytegan/rng.hpp"
#include "json.hpp"

namespace bytegan::corpus {

using json = nlohmann::ordered_json;

const char* label_name(Label l) { return l == Label::Malware ? "malware" : "benign"; }

const char* split_name(Split s) {
  switch (s) {
    case Split::GanTrain: return "gan_train";
    case Split::ClassifierTrain: return "classifier_train";
    case Split::Test: return "test";
  }
  return "?";
}

const char* origin_name(Origin o) {
  switch (o) {
    case Origin::Real: return "real";
    case Origin::Synthetic: return "synthetic";
    case Origin::Perturbed: return "perturbed";
  }
  return "?";
}

Label parse_label(const std::string& s) {
  if (s == "malware") return Label::Malware;
  if (s == "benign") return Label::Benign;
  fail(Errc::FormatViolation, "unknown label: " + s);
}

Split parse_split(const std::string& s) {
  if (s == "gan_train") return Split::GanTrain;
  if (s == "classifier_train") return Split::ClassifierTrain;
  if (s == "test") return Split::Test;
  fail(Errc::FormatViolation, "unknown split: " + s);
}

Origin parse_origin(const std::string& s) {
  if (s == "real") return Origin::Real;
  if (s == "synthetic") return Origin::Synthetic;
  if (s == "perturbed") return Origin::Perturbed;
  fail(Errc::FormatViolation, "unknown origin: " + s);
}

std::string now_utc_iso8601() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoFailure, "cannot write manifest " + path.string());
  json header;
  header["kind"] = "header";
  header["seed"] = m.seed;
  header["size_set"] = m.size_set;
  header["created_at"] = m.created_at;
  out << header.dump() << "\n";
  for (const auto& r : m.records) {
    json j;
    j["image_path"] = r.image_path;
    j["label"] = label_name(r.label);
    j["split"] = split_name(r.split);
    j["content_hash"] = r.content_hash;
    j["origin"] = origin_name(r.origin);
    j["source_id"] = r.source_id;
    j["image_size"] = r.image_size;
    out << j.dump() << "\n";
  }
  if (!out) fail(Errc::IoFailure, "write error on manifest " + path.string());
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, "cannot open manifest " + path.string());
  CorpusManifest m;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      fail(Errc::FormatViolation,
           path.string() + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
    }
    if (j.contains("kind") && j["kind"] == "header") {
      m.seed = j.value("seed", 0ULL);
      m.size_set = j.value("size_set", std::vector<int>{});
      m.created_at = j.value("created_at", "");
      continue;
    }
    try {
      SampleRecord r;
      r.image_path = j.at("image_path").get<std::string>();
      r.label = parse_label(j.at("label").get<std::string>());
      r.split = parse_split(j.at("split").get<std::string>());
      r.content_hash = j.at("content_hash").get<std::string>();
      r.origin = parse_origin(j.at("origin").get<std::string>());
      r.source_id = j.at("source_id").get<std::string>();
      r.image_size = j.at("image_size").get<int>();
      m.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      fail(Errc::FormatViolation,
           path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

CorpusManifest split_corpus(const CorpusManifest& m, const SplitOptions& opt) {
  if (opt.enforce_gan_range && (opt.gan_fraction < 0.2 || opt.gan_fraction > 0.35)) {
    fail(Errc::ConfigError, "gan_fraction must lie in [0.2, 0.35]");
  }
  if (opt.gan_fraction < 0.0 || opt.test_fraction < 0.0 ||
      opt.gan_fraction + opt.test_fraction > 1.0 + 1e-12) {
    fail(Errc::InsufficientSamples, "split fractions exceed the available pool");
  }

  CorpusManifest out = m;
  out.seed = opt.seed;
  const double clf_fraction = 1.0 - opt.gan_fraction - opt.test_fraction;

  for (Label label : {Label::Malware, Label::Benign}) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < out.records.size(); ++i) {
      if (out.records[i].origin != Origin::Synthetic && out.records[i].label == label) {
        idx.push_back(i);
      }
    }
    if (idx.empty()) continue;

    // deterministic order before the seeded shuffle
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
      return out.records[a].image_path < out.records[b].image_path;
    });
    Rng rng(opt.seed, fnv1a(std::string("split/") + label_name(label)));
    rng.shuffle(idx);

    const auto n = static_cast<int64_t>(idx.size());
    auto n_gan = static_cast<int64_t>(std::llround(opt.gan_fraction * static_cast<double>(n)));
    auto n_clf = static_cast<int64_t>(std::llround(clf_fraction * static_cast<double>(n)));
    if (n_gan + n_clf > n) n_clf = n - n_gan;
    int64_t n_test = n - n_gan - n_clf;

    auto cell_required = [&](double frac, int64_t count) { return frac > 0.0 && count == 0; };
    if (cell_required(opt.gan_fraction, n_gan) || cell_required(clf_fraction, n_clf) ||
        cell_required(opt.test_fraction, n_test)) {
      fail(Errc::InsufficientSamples, std::string("class ") + label_name(label) +
                                          " cannot fill every configured split cell");
    }

    for (int64_t i = 0; i < n; ++i) {
      Split s = i < n_gan               ? Split::GanTrain
                : i < n_gan + n_clf     ? Split::ClassifierTrain
                                        : Split::Test;
      out.records[idx[static_cast<size_t>(i)]].split = s;
    }
  }
  return out;
}

std::vector<const SampleRecord*> select(const CorpusManifest& m, Label label, Split split) {
  std::vector<const SampleRecord*> out;
  for (const auto& r : m.records) {
    if (r.label == label && r.split == split) out.push_back(&r);
  }
  return out;
}

std::vector<const SampleRecord*> select_split(const CorpusManifest& m, Split split) {
  std::vector<const SampleRecord*> out;
  for (const auto& r : m.records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

}  // namespace bytegan::corpus
