// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcr/error.hpp"

// L-ensemble determinantal point process over a small ground set:
//
//   L_ij = q_i * S_ij * q_j,     P(Y) = det(L_Y) / det(L + I)
//
// q carries per-item quality and S the pairwise similarity, so det(L_Y)
// grows with quality and shrinks as selected items become similar.

namespace pcr {

inline constexpr double kQualityFloor = 1e-6;
inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr double kPsdTolerance = 1e-8;
// A Schur complement at or below this fraction of the item's own diagonal
// entry is treated as zero, i.e. the item lies in the span of the others.
inline constexpr double kSingularTolerance = 1e-12;
inline constexpr std::size_t kMaxExactItems = 20;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class DppKernel {
 public:
  /// Assembles L from quality and similarity. Qualities are floored at
  /// kQualityFloor. S must be symmetric with a unit diagonal; a slightly
  /// indefinite S (min eigenvalue within kPsdTolerance of zero, relative to
  /// its spectral radius) is projected back onto the PSD cone.
  static DppKernel build(const Eigen::VectorXd& quality, const Eigen::MatrixXd& similarity) {
    const auto n = quality.size();
    if (similarity.rows() != n || similarity.cols() != n) {
      throw InvalidArgument("build_kernel: quality has " + std::to_string(n) +
                            " entries but similarity is " + std::to_string(similarity.rows()) +
                            "x" + std::to_string(similarity.cols()));
    }
    if (!quality.allFinite() || !similarity.allFinite()) {
      throw InvalidArgument("build_kernel: non-finite input");
    }

    Eigen::MatrixXd s = similarity;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(s(i, i) - 1.0) > kSymmetryTolerance) {
        throw InvalidArgument("build_kernel: S(" + std::to_string(i) + "," + std::to_string(i) +
                              ") != 1");
      }
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (std::abs(s(i, j) - s(j, i)) > kSymmetryTolerance) {
          throw InvalidArgument("build_kernel: S is not symmetric at (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
        }
        if (std::abs(s(i, j)) > 1.0 + kSymmetryTolerance) {
          throw InvalidArgument("build_kernel: S(" + std::to_string(i) + "," + std::to_string(j) +
                                ") outside [-1, 1]");
        }
      }
    }
    s = (0.5 * (s + s.transpose())).eval();
    s.diagonal().setOnes();

    if (n > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
      const auto& values = eig.eigenvalues();
      const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
      const double smallest = values.minCoeff();
      if (smallest < -kPsdTolerance * scale) {
        throw InvalidArgument("build_kernel: similarity is not positive semi-definite (min eigenvalue " +
                              std::to_string(smallest) + ")");
      }
      if (smallest < 0.0) {
        const Eigen::VectorXd clipped = values.cwiseMax(0.0);
        s = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        // Congruence by diag(1/sqrt(S_ii)) restores the unit diagonal and
        // keeps the matrix PSD.
        const Eigen::VectorXd inv = s.diagonal().cwiseMax(kSingularTolerance).cwiseSqrt().cwiseInverse();
        s = (inv.asDiagonal() * s * inv.asDiagonal()).eval();
        s = (0.5 * (s + s.transpose())).eval();
        s.diagonal().setOnes();
      }
      s = s.cwiseMax(-1.0).cwiseMin(1.0);
    }

    DppKernel k;
    k.quality_ = quality.cwiseMax(kQualityFloor);
    k.similarity_ = std::move(s);
    k.matrix_ = k.quality_.asDiagonal() * k.similarity_ * k.quality_.asDiagonal();
    return k;
  }

  std::size_t size() const { return static_cast<std::size_t>(quality_.size()); }
  const Eigen::VectorXd& quality() const { return quality_; }
  const Eigen::MatrixXd& similarity() const { return similarity_; }
  /// The assembled L.
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::VectorXd quality_;
  Eigen::MatrixXd similarity_;
  Eigen::MatrixXd matrix_;
};

inline DppKernel build_kernel(const Eigen::VectorXd& quality, const Eigen::MatrixXd& similarity) {
  return DppKernel::build(quality, similarity);
}

namespace detail {

inline void check_subset(const DppKernel& kernel, std::span<const std::size_t> subset) {
  std::vector<bool> seen(kernel.size(), false);
  for (const auto i : subset) {
    if (i >= kernel.size()) {
      throw InvalidArgument("subset index " + std::to_string(i) + " out of range for kernel of size " +
                            std::to_string(kernel.size()));
    }
    if (seen[i]) throw InvalidArgument("subset index " + std::to_string(i) + " repeated");
    seen[i] = true;
  }
}

}  // namespace detail

/// log det(L_Y); 0 for the empty set, -inf when L_Y is singular.
inline double subset_log_det(const DppKernel& kernel, std::span<const std::size_t> subset) {
  detail::check_subset(kernel, subset);
  const auto m = static_cast<Eigen::Index>(subset.size());
  const auto& full = kernel.matrix();
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(m, m);
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double diag = full(static_cast<Eigen::Index>(subset[j]), static_cast<Eigen::Index>(subset[j]));
    const double pivot = diag - chol.row(j).head(j).squaredNorm();
    if (!(pivot > kSingularTolerance * diag)) return kNegInf;
    const double root = std::sqrt(pivot);
    chol(j, j) = root;
    log_det += std::log(pivot);
    for (Eigen::Index i = j + 1; i < m; ++i) {
      const double a = full(static_cast<Eigen::Index>(subset[i]), static_cast<Eigen::Index>(subset[j]));
      chol(i, j) = (a - chol.row(i).head(j).dot(chol.row(j).head(j))) / root;
    }
  }
  return log_det;
}

/// log det(L + I), the log of the normalizer summed over all 2^n subsets.
inline double log_normalizer(const DppKernel& kernel) {
  const auto n = static_cast<Eigen::Index>(kernel.size());
  const Eigen::MatrixXd shifted = kernel.matrix() + Eigen::MatrixXd::Identity(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success) throw InvalidArgument("L + I is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

/// det(L_Y) / det(L + I). Only for ground sets of at most kMaxExactItems.
inline double exact_subset_prob(const DppKernel& kernel, std::span<const std::size_t> subset) {
  if (kernel.size() > kMaxExactItems) {
    throw InvalidArgument("exact_subset_prob: ground set of " + std::to_string(kernel.size()) +
                          " items exceeds the supported " + std::to_string(kMaxExactItems));
  }
  const double numerator = subset_log_det(kernel, subset);
  if (numerator == kNegInf) return 0.0;
  return std::exp(numerator - log_normalizer(kernel));
}

struct GreedyResult {
  std::vector<std::size_t> selected;  // pick order
  std::vector<double> gains;          // log det increase at each pick
};

/// Greedy MAP: repeatedly adds the item with the largest log-det gain
/// (lowest index on ties). Stops after `max_items` picks, when no finite
/// gain remains, or, with `stop_on_nonpositive_gain`, when the best gain
/// is <= 0.
///
/// Gains are maintained incrementally: for each candidate i, c_i holds its
/// coordinates against the Cholesky factor of L_Y and d_i^2 its residual
/// variance, so the gain of adding i is log d_i^2.
inline GreedyResult greedy_map(const DppKernel& kernel, std::size_t max_items,
                               bool stop_on_nonpositive_gain) {
  if (max_items < 1) throw InvalidArgument("greedy_map: max_items must be >= 1");
  const std::size_t n = kernel.size();
  const auto& L = kernel.matrix();
  const std::size_t budget = std::min(max_items, n);

  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(budget),
                                                 static_cast<Eigen::Index>(n));
  Eigen::VectorXd residual = L.diagonal();
  std::vector<bool> taken(n, false);

  auto gain_of = [&](std::size_t i) {
    const double d2 = residual[static_cast<Eigen::Index>(i)];
    const double diag = L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    return d2 > kSingularTolerance * diag ? std::log(d2) : kNegInf;
  };

  GreedyResult out;
  while (out.selected.size() < budget) {
    std::size_t best = n;
    double best_gain = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double g = gain_of(i);
      if (best == n || g > best_gain) {
        best = i;
        best_gain = g;
      }
    }
    if (best == n || best_gain == kNegInf) break;
    if (stop_on_nonpositive_gain && best_gain <= 0.0) break;

    const auto step = static_cast<Eigen::Index>(out.selected.size());
    taken[best] = true;
    out.selected.push_back(best);
    out.gains.push_back(best_gain);
    if (out.selected.size() == budget) break;

    const auto b = static_cast<Eigen::Index>(best);
    const double d = std::sqrt(residual[b]);
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const double e = (L(b, ii) - coords.col(b).head(step).dot(coords.col(ii).head(step))) / d;
      coords(step, ii) = e;
      residual[ii] -= e * e;
    }
  }
  return out;
}

}  // namespace pcr
