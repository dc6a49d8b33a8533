#include "gamerge/gamap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gamerge/error.hpp"

namespace gamerge {
namespace {

// 3x3 box mean with replicate padding.
Matrix box_mean3(const Matrix& m) {
  const Eigen::Index rows = m.rows(), cols = m.cols();
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double sum = 0.0;
      for (Eigen::Index dr = -1; dr <= 1; ++dr) {
        const Eigen::Index rr = std::clamp<Eigen::Index>(r + dr, 0, rows - 1);
        for (Eigen::Index dc = -1; dc <= 1; ++dc) {
          sum += m(rr, std::clamp<Eigen::Index>(c + dc, 0, cols - 1));
        }
      }
      out(r, c) = sum / 9.0;
    }
  }
  return out;
}

}  // namespace

SobelGradients sobel_gradients(const GrayImage& img) {
  const int h = img.height(), w = img.width();
  if (h < 3 || w < 3) {
    throw DimensionError("Sobel needs an image of at least 3x3, got " + std::to_string(h) + "x" +
                         std::to_string(w));
  }
  const Matrix& in = img.intensity;
  SobelGradients g{Matrix(h, w), Matrix(h, w)};
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
      const double tl = in(ym, xm), tc = in(ym, x), tr = in(ym, xp);
      const double ml = in(y, xm), mr = in(y, xp);
      const double bl = in(yp, xm), bc = in(yp, x), br = in(yp, xp);
      g.gx(y, x) = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
      g.gy(y, x) = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
    }
  }
  return g;
}

Matrix gradient_magnitude(const Matrix& gx, const Matrix& gy) {
  if (gx.rows() != gy.rows() || gx.cols() != gy.cols()) {
    throw ShapeError("gradient components differ in shape");
  }
  return (gx.array().square() + gy.array().square()).sqrt().matrix();
}

GradMap downsample_to_tokens(const Matrix& magnitude, int patch_size) {
  if (patch_size < 1 || magnitude.rows() % patch_size != 0 ||
      magnitude.cols() % patch_size != 0) {
    throw DimensionError("gradient map is not divisible by patch size " +
                         std::to_string(patch_size));
  }
  const Eigen::Index rows = magnitude.rows() / patch_size;
  const Eigen::Index cols = magnitude.cols() / patch_size;
  const double area = static_cast<double>(patch_size) * patch_size;
  GradMap out{Matrix(rows, cols)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      out.values(r, c) =
          magnitude.block(r * patch_size, c * patch_size, patch_size, patch_size).sum() / area;
    }
  }
  return out;
}

VarMap token_variance(const TokenGrid& grid, VarianceProjection projection) {
  Matrix scalar(grid.rows, grid.cols);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const auto token = grid.tokens.row(r * grid.cols + c);
      scalar(r, c) = projection == VarianceProjection::Mean ? token.mean() : token.norm();
    }
  }
  if (scalar.size() == 0) return {scalar};

  const Matrix mean = box_mean3(scalar);
  const Matrix mean_sq = box_mean3(scalar.array().square().matrix());
  VarMap out{Matrix(grid.rows, grid.cols)};
  constexpr double kRoundOff = 8.0 * std::numeric_limits<double>::epsilon();
  for (Eigen::Index i = 0; i < scalar.size(); ++i) {
    const double v = mean_sq(i) - mean(i) * mean(i);
    // Differences within round-off of E[X^2] are treated as exact zeros.
    out.values(i) = v <= kRoundOff * mean_sq(i) ? 0.0 : v;
  }
  return out;
}

Matrix minmax_normalize(const Matrix& m) {
  if (m.size() == 0) return m;
  const double lo = m.minCoeff(), hi = m.maxCoeff();
  if (!(hi > lo)) return Matrix::Zero(m.rows(), m.cols());
  return ((m.array() - lo) / (hi - lo)).matrix();
}

GaMap fuse_ga_map(const GradMap& grid, const VarMap& var, double alpha, double beta) {
  if (grid.values.rows() != var.values.rows() || grid.values.cols() != var.values.cols()) {
    throw ShapeError("grad map and var map lattices differ");
  }
  if (!(alpha >= 0.0) || !(beta >= 0.0) || (alpha == 0.0 && beta == 0.0)) {
    throw ConfigError("GA weights must be non-negative and not both zero");
  }
  const Matrix fused = alpha * minmax_normalize(grid.values) + beta * minmax_normalize(var.values);
  return GaMap{minmax_normalize(fused), alpha, beta};
}

GaMap compute_ga_map(const ImageFrame& frame, const TokenGrid& grid, int patch_size,
                     const GaMapParams& params) {
  const GrayImage gray = to_grayscale(frame);
  const SobelGradients g = sobel_gradients(gray);
  const GradMap grad = downsample_to_tokens(gradient_magnitude(g.gx, g.gy), patch_size);
  const VarMap var = token_variance(grid, params.projection);
  return fuse_ga_map(grad, var, params.alpha, params.beta);
}

}  // namespace gamerge
