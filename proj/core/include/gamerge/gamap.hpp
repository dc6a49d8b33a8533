#pragma once

#include "gamerge/ingest.hpp"
#include "gamerge/tensor.hpp"

namespace gamerge {

struct SobelGradients {
  Matrix gx;  // H x W
  Matrix gy;  // H x W
};

/// Per-token mean gradient magnitude on the h_t x w_t lattice.
struct GradMap {
  Matrix values;
};

/// Local 3x3 variance of the per-token scalar feature, clamped to >= 0.
struct VarMap {
  Matrix values;
};

/// Geometry-aware importance per token, rescaled to [0, 1].
struct GaMap {
  Matrix values;
  double alpha = 0.5;
  double beta = 0.5;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  int size() const { return static_cast<int>(values.size()); }
};

// How token features are reduced to one scalar before pooling.
enum class VarianceProjection { Mean, Norm };

struct GaMapParams {
  double alpha = 0.5;
  double beta = 0.5;
  VarianceProjection projection = VarianceProjection::Mean;
};

/// 3x3 Sobel with replicate-padded borders.
/// Kx = [[-1,0,1],[-2,0,2],[-1,0,1]], Ky = Kx^T. Requires H, W >= 3.
SobelGradients sobel_gradients(const GrayImage& img);

Matrix gradient_magnitude(const Matrix& gx, const Matrix& gy);

GradMap downsample_to_tokens(const Matrix& magnitude, int patch_size);

/// avg_pool(X^2) - avg_pool(X)^2 with a 3x3 replicate-padded window, where X
/// is the per-token scalar projection of the patch tokens (specials excluded).
VarMap token_variance(const TokenGrid& grid,
                      VarianceProjection projection = VarianceProjection::Mean);

/// (m - min) / (max - min); a constant map becomes all zeros.
Matrix minmax_normalize(const Matrix& m);

/// alpha * norm(grid) + beta * norm(var), rescaled to [0, 1].
GaMap fuse_ga_map(const GradMap& grid, const VarMap& var, double alpha, double beta);

/// Whole per-frame pipeline: grayscale, Sobel, magnitude, downsample,
/// variance and fusion.
GaMap compute_ga_map(const ImageFrame& frame, const TokenGrid& grid, int patch_size,
                     const GaMapParams& params = {});

}  // namespace gamerge
