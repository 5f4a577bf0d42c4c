#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "stsvd/framestack.hpp"

namespace stsvd {

/// Thin SVD S = U * diag(sigma) * V^T with r = min(rows, cols) components,
/// sigma non-increasing. Each column of U has its largest-magnitude entry
/// made positive (V flipped with it).
struct SvdFactors {
  Matrix U;
  Vector sigma;
  Matrix V;

  std::size_t rank() const noexcept { return static_cast<std::size_t>(sigma.size()); }
};

/// Orthonormal approximation of the dominant (tissue) column space of S.
struct SubspaceBasis {
  Matrix Q;                     // rows(S) x k, orthonormal columns
  std::size_t k = 0;
  std::uint64_t seed = 0;
  int q_iters = 0;
  std::size_t p_oversample = 0;
  Vector sigma;                 // Ritz singular values of the full refined basis, descending
};

struct RsvdOptions {
  std::size_t oversample = 10;  // clamped to n_t - k
  int power_iters = 2;
  std::uint64_t seed = 0x5EED;
};

SvdFactors full_svd(const Matrix& S);

/// U * diag(sigma .* mask) * V^T where mask keeps the 1-based orders in `keep`.
Matrix svd_filter(const SvdFactors& f, std::span<const std::size_t> keep);

/// Deterministic i.i.d. N(0, 1) matrix.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

/// S * R with R of shape n_t x (k + p).
Matrix gaussian_sketch(const Matrix& S, std::size_t k, std::size_t p, std::uint64_t seed);

/// Householder QR with column pivoting. Returns an orthonormal basis of the
/// numerical range of `sketch`: columns whose |R_jj| falls below 1e-12 of
/// the leading pivot are dropped, so the result may be narrower than the
/// input or empty.
Matrix orthonormal_basis(const Matrix& sketch);

/// q rounds of Q <- orth(S * orth(S^T * Q)).
Matrix power_iteration_refine(const Matrix& S, const Matrix& Q, int q);

/// P = Q * (Q^T * S).
Matrix project_signal(const Matrix& S, const Matrix& Q);

/// Sketch, orthonormalize, refine, then keep the k leading Ritz vectors of
/// the refined basis. Throws NoSignalSubspace when S has no numerical range.
SubspaceBasis signal_basis(const Matrix& S, std::size_t k, const RsvdOptions& opts = {});

/// Approximate leading `rank` singular triplets through the same randomized
/// path (small exact SVD of Q^T S).
SvdFactors randomized_svd(const Matrix& S, std::size_t rank, const RsvdOptions& opts = {});

Matrix rsvd_denoise(const Matrix& S, std::size_t k, const RsvdOptions& opts = {});
FrameStack rsvd_denoise(const FrameStack& fs, std::size_t k, const RsvdOptions& opts = {});

}  // namespace stsvd
