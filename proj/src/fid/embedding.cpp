#include "bytegan/fid/embedding.hpp"

#include "bytegan/ad/tape.hpp"
#include "bytegan/rng.hpp"

namespace bytegan::fid {

namespace {

// keeps squared distances between visually distinct sets well above the
// paper's gate threshold while self-distances stay at zero
constexpr double kFeatureScale = 24.0;
constexpr int kMidChannels = 16;

std::vector<double> seeded_normal(uint64_t seed, const std::string& name, int64_t n,
                                  double sigma) {
  std::vector<double> v(static_cast<size_t>(n));
  uint64_t stream = fnv1a("randconv/" + name);
  for (int64_t i = 0; i < n; ++i) {
    v[static_cast<size_t>(i)] = sigma * normal_at(seed, stream, static_cast<uint64_t>(i));
  }
  return v;
}

}  // namespace

RandomConvFeatures::RandomConvFeatures(uint64_t seed, int d) : seed_(seed), d_(d) {
  id_ = "randconv-s" + std::to_string(seed) + "-d" + std::to_string(d);
}

EmbeddingSet RandomConvFeatures::embed(const std::vector<corpus::GrayImage>& images) const {
  EmbeddingSet out;
  out.d = d_;
  out.extractor_id = id_;
  if (images.empty()) return out;

  const int size = images[0].width;
  for (const auto& img : images) {
    if (img.width != size || img.height != size) {
      fail(Errc::SizeMismatch, "all images must share one size for embedding");
    }
  }

  auto k1 = seeded_normal(seed_, "k1", static_cast<int64_t>(kMidChannels) * 16, 0.25);
  auto k2 = seeded_normal(seed_, "k2", static_cast<int64_t>(d_) * kMidChannels * 16, 0.0625);

  out.n = static_cast<int>(images.size());
  out.vectors.resize(static_cast<size_t>(out.n) * d_);

  constexpr int kChunk = 64;
  for (size_t base = 0; base < images.size(); base += kChunk) {
    size_t count = std::min<size_t>(kChunk, images.size() - base);
    std::vector<double> pix(count * static_cast<size_t>(size) * size);
    for (size_t i = 0; i < count; ++i) {
      const auto& img = images[base + i];
      for (size_t p = 0; p < img.pixels.size(); ++p) {
        pix[i * img.pixels.size() + p] = static_cast<double>(img.pixels[p]) / 127.5 - 1.0;
      }
    }
    ad::Tape tp;
    ad::Tensor x = tp.leaf({static_cast<int>(count), 1, size, size}, pix, false);
    ad::Tensor w1 = tp.constant({kMidChannels, 1, 4, 4}, k1);
    ad::Tensor w2 = tp.constant({d_, kMidChannels, 4, 4}, k2);
    ad::Tensor h = tp.leaky_relu(tp.conv2d(x, w1, 2, 1), 0.2);
    ad::Tensor h2 = tp.leaky_relu(tp.conv2d(h, w2, 2, 1), 0.2);
    // global average pool per channel
    const auto& hs = h2.shape();
    int64_t hw = static_cast<int64_t>(hs[2]) * hs[3];
    const auto& vals = h2.values();
    for (size_t i = 0; i < count; ++i) {
      for (int c = 0; c < d_; ++c) {
        double acc = 0.0;
        const double* p = vals.data() + (static_cast<int64_t>(i) * d_ + c) * hw;
        for (int64_t t = 0; t < hw; ++t) acc += p[t];
        out.vectors[(base + i) * static_cast<size_t>(d_) + static_cast<size_t>(c)] =
            kFeatureScale * acc / static_cast<double>(hw);
      }
    }
  }
  return out;
}

std::unique_ptr<Extractor> make_random_extractor(uint64_t seed, int d) {
  return std::make_unique<RandomConvFeatures>(seed, d);
}

}  // namespace bytegan::fid
