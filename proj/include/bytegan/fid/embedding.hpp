#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bytegan/corpus/image.hpp"

namespace bytegan::fid {

struct EmbeddingSet {
  int n = 0;
  int d = 0;
  std::vector<double> vectors;  // row-major n x d
  std::string extractor_id;
  std::string source;

  const double* row(int i) const { return vectors.data() + static_cast<int64_t>(i) * d; }
};

class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual EmbeddingSet embed(const std::vector<corpus::GrayImage>& images) const = 0;
};

// Training-free feature map: two seeded random conv layers with leaky
// rectifiers, global average pooled per channel. Deterministic per (seed, d).
class RandomConvFeatures : public Extractor {
 public:
  RandomConvFeatures(uint64_t seed, int d = 64);
  std::string id() const override { return id_; }
  int dim() const override { return d_; }
  EmbeddingSet embed(const std::vector<corpus::GrayImage>& images) const override;

 private:
  uint64_t seed_;
  int d_;
  std::string id_;
};

std::unique_ptr<Extractor> make_random_extractor(uint64_t seed = 17, int d = 64);

}  // namespace bytegan::fid
