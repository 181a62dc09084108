#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "smr/image.hpp"

namespace smr {

struct Bm3dParams {
  std::size_t block_size = 8;
  std::size_t max_group_size = 16;  // power of two
  std::size_t search_window = 39;   // odd side length, centred on the reference
  std::size_t reference_step = 3;
  /// Matching distance bound on the block SSD. Negative: derived as
  /// match_scale * sigma^2 * block_size^2.
  double match_threshold = -1.0;
  double match_scale = 2.5;
  double sigma = 0.0;

  double effective_match_threshold() const;
  void validate() const;
};

struct BlockCoord {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  bool operator==(const BlockCoord&) const = default;
};

/// Matched block positions per reference block; each group starts with its reference.
struct GroupingPlan {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t block_size = 0;
  std::vector<std::vector<BlockCoord>> groups;

  bool operator==(const GroupingPlan&) const = default;
};

/// Coefficients of every group: for group g, K blocks of block_size^2 values,
/// block k's coefficients contiguous. retained counts nonzeros after thresholding;
/// thresholded is false until hard_threshold has run.
struct GroupSpectrum {
  std::size_t block_size = 0;
  std::vector<std::vector<double>> coefficients;
  std::vector<std::size_t> retained;
  bool thresholded = false;

  std::size_t total_retained() const;
};

GroupingPlan block_match(const Image& image, const Bm3dParams& params);

/// Phi: 2D orthonormal DCT-II per block, then orthonormal Haar across the stack.
GroupSpectrum analysis(const Image& image, const GroupingPlan& plan, const Bm3dParams& params);

/// Psi: inverse transforms and weighted aggregation. Group weight is
/// 1 / (1 + retained) after thresholding and 1 otherwise. Pixels no block covers are 0.
Image synthesis(const GroupSpectrum& spectrum, const GroupingPlan& plan, const Bm3dParams& params);

/// Keeps coefficients with |c| >= sqrt(tau); tau = +inf clears everything.
GroupSpectrum hard_threshold(GroupSpectrum spectrum, double tau);

struct ShrinkResult {
  Image image;
  std::size_t retained = 0;  // nonzero coefficients of the thresholded spectrum
};

/// Psi[Phi(image)]_tau with the plan rebuilt from `image`.
ShrinkResult shrink(const Image& image, double tau, const Bm3dParams& params);

/// Median absolute finest-scale diagonal Haar detail / 0.6745.
double estimate_sigma(const Image& image);

/// Orthonormal transforms, exposed for tests.
std::vector<double> dct_matrix(std::size_t n);
void haar_forward(double* values, std::size_t count, std::size_t stride);
void haar_inverse(double* values, std::size_t count, std::size_t stride);

}  // namespace smr
