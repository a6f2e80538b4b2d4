#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bytegan/fid/embedding.hpp"

namespace bytegan::fid {

struct GaussianStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;  // unbiased (n-1), symmetrized
  int64_t n = 0;
  int d() const { return static_cast<int>(mu.size()); }
};

// Requires n >= d + 1 so the covariance estimate has full support.
GaussianStats fit_gaussian(const EmbeddingSet& set);

// Symmetric eigendecomposition square root with negative eigenvalues clamped
// to zero. `eig_tol` is the allowed negative-eigenvalue slack.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& a, double eig_tol = 1e-8);

struct FidEstimate {
  enum class Kind { FiniteN, Infinity };
  double value = 0.0;
  int64_t n_used = 0;
  Kind kind = Kind::FiniteN;
};

// ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 sqrt(Sa^1/2 Sb Sa^1/2)), clamped >= 0.
FidEstimate frechet_distance(const GaussianStats& a, const GaussianStats& b);

struct FidInfinityOptions {
  std::vector<int> schedule;  // empty -> {ceil(n/4), ceil(n/2), n}
  int resamples = 5;
  uint64_t seed = 0;
};

struct FidScheduleRow {
  int n = 0;
  double mean_fid = 0.0;
  double std_fid = 0.0;
};

struct FidInfinityResult {
  FidEstimate estimate;               // kind == Infinity
  std::vector<FidScheduleRow> rows;   // per schedule point
  double slope = 0.0;                 // fitted coefficient of 1/N
};

// Chong-Forsyth style bias removal: the fake set is subsampled at each
// schedule size (real statistics stay fixed at the full set), the mean FID
// per size is fit against 1/N by least squares, and the intercept is the
// infinite-sample estimate.
FidInfinityResult fid_infinity(const EmbeddingSet& real, const EmbeddingSet& fake,
                               const FidInfinityOptions& opt = {});

}  // namespace bytegan::fid
