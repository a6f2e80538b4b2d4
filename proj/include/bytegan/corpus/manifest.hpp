#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bytegan/error.hpp"

namespace bytegan::corpus {

enum class Label { Malware, Benign };
enum class Split { GanTrain, ClassifierTrain, Test };
enum class Origin { Real, Synthetic, Perturbed };

const char* label_name(Label l);
const char* split_name(Split s);
const char* origin_name(Origin o);
Label parse_label(const std::string& s);
Split parse_split(const std::string& s);
Origin parse_origin(const std::string& s);

struct SampleRecord {
  std::string image_path;
  Label label = Label::Benign;
  Split split = Split::Test;
  std::string content_hash;  // hex sha-256 of the image file bytes
  Origin origin = Origin::Real;
  std::string source_id;
  int image_size = 0;
};

struct CorpusManifest {
  std::vector<SampleRecord> records;
  uint64_t seed = 0;
  std::vector<int> size_set;
  std::string created_at;  // ISO-8601 UTC
};

std::string now_utc_iso8601();

// JSON-lines: a header object first ({"kind":"header",...}), then one record
// object per line with exactly the documented field names.
void write_manifest(const CorpusManifest& m, const std::filesystem::path& path);
CorpusManifest read_manifest(const std::filesystem::path& path);

struct SplitOptions {
  double gan_fraction = 0.30;
  double test_fraction = 0.70;  // remainder (if any) becomes ClassifierTrain
  uint64_t seed = 0;
  bool enforce_gan_range = true;  // gan_fraction in [0.2, 0.35]
};

// Stratified per class over the Real/Perturbed records; Synthetic records
// keep their split. Every non-synthetic record lands in exactly one split.
CorpusManifest split_corpus(const CorpusManifest& m, const SplitOptions& opt);

// Convenience filters
std::vector<const SampleRecord*> select(const CorpusManifest& m, Label label, Split split);
std::vector<const SampleRecord*> select_split(const CorpusManifest& m, Split split);

}  // namespace bytegan::corpus
