#include "stsvd/svdcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "stsvd/error.hpp"
#include "stsvd/random.hpp"

namespace stsvd {

namespace {

constexpr double kRankCutoff = 1e-12;

void require_finite(const Matrix& S, const char* what) {
  if (!S.allFinite()) throw Error(ErrorKind::Validation, std::string(what) + " contains non-finite values");
}

void apply_sign_convention(Matrix& U, Matrix& V) {
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    Eigen::Index arg = 0;
    U.col(j).cwiseAbs().maxCoeff(&arg);
    if (U(arg, j) < 0.0) {
      U.col(j) *= -1.0;
      V.col(j) *= -1.0;
    }
  }
}

// Exact thin SVD of a small matrix, sorted and sign-normalized.
SvdFactors small_svd(const Matrix& B) {
  Eigen::BDCSVD<Matrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactors f{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  apply_sign_convention(f.U, f.V);
  return f;
}

std::size_t clamp_oversample(std::size_t k, std::size_t p, std::size_t n_t) {
  return std::min(p, n_t - k);
}

}  // namespace

SvdFactors full_svd(const Matrix& S) {
  require_finite(S, "matrix passed to full_svd");
  if (S.size() == 0) return {};
  return small_svd(S);
}

Matrix svd_filter(const SvdFactors& f, std::span<const std::size_t> keep) {
  Vector mask = Vector::Zero(f.sigma.size());
  for (std::size_t order : keep) {
    if (order < 1 || order > f.rank()) {
      throw Error(ErrorKind::Bounds, "singular value order " + std::to_string(order) + " outside [1, " +
                                         std::to_string(f.rank()) + "]");
    }
    mask(static_cast<Eigen::Index>(order - 1)) = 1.0;
  }
  return f.U * (f.sigma.cwiseProduct(mask)).asDiagonal() * f.V.transpose();
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Matrix R(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      R(i, j) = standard_normal_at(seed, RandomStream::Sketch, static_cast<std::uint64_t>(j * rows + i));
    }
  }
  return R;
}

Matrix gaussian_sketch(const Matrix& S, std::size_t k, std::size_t p, std::uint64_t seed) {
  const auto n_t = static_cast<std::size_t>(S.cols());
  if (k < 1) throw Error(ErrorKind::RankTooLarge, "sketch rank k must be >= 1");
  if (k + p > n_t) {
    throw Error(ErrorKind::RankTooLarge, "k + p = " + std::to_string(k + p) + " exceeds n_t = " + std::to_string(n_t));
  }
  return S * gaussian_matrix(S.cols(), static_cast<Eigen::Index>(k + p), seed);
}

Matrix orthonormal_basis(const Matrix& sketch) {
  require_finite(sketch, "sketch");
  const Eigen::Index m = sketch.rows();
  const Eigen::Index n = sketch.cols();
  const Eigen::Index steps = std::min(m, n);

  Matrix A = sketch;
  std::vector<Vector> reflectors;
  std::vector<double> betas;
  double lead = 0.0;

  for (Eigen::Index j = 0; j < steps; ++j) {
    // Pivot: largest trailing column norm, recomputed exactly each step.
    Eigen::Index pivot = j;
    double best = -1.0;
    for (Eigen::Index c = j; c < n; ++c) {
      const double norm2 = A.col(c).tail(m - j).squaredNorm();
      if (norm2 > best) {
        best = norm2;
        pivot = c;
      }
    }
    if (pivot != j) A.col(j).swap(A.col(pivot));

    const double alpha_norm = std::sqrt(best);
    if (j == 0) lead = alpha_norm;
    if (alpha_norm == 0.0 || alpha_norm < kRankCutoff * lead) break;

    Vector v = A.col(j).tail(m - j);
    const double alpha = v(0) >= 0.0 ? -alpha_norm : alpha_norm;
    v(0) -= alpha;
    const double vnorm2 = v.squaredNorm();
    const double beta = vnorm2 > 0.0 ? 2.0 / vnorm2 : 0.0;

    auto trailing = A.bottomRightCorner(m - j, n - j);
    trailing.noalias() -= (beta * v) * (v.transpose() * trailing);

    reflectors.push_back(std::move(v));
    betas.push_back(beta);
  }

  const auto rank = static_cast<Eigen::Index>(reflectors.size());
  Matrix Q = Matrix::Identity(m, rank);
  for (Eigen::Index j = rank - 1; j >= 0; --j) {
    const Vector& v = reflectors[static_cast<std::size_t>(j)];
    auto block = Q.bottomRows(m - j);
    block.noalias() -= (betas[static_cast<std::size_t>(j)] * v) * (v.transpose() * block);
  }
  return Q;
}

Matrix power_iteration_refine(const Matrix& S, const Matrix& Q, int q) {
  if (q < 0) throw Error(ErrorKind::Validation, "power iteration count must be >= 0");
  if (q > 0 && Q.rows() != S.rows()) {
    throw Error(ErrorKind::Dimension, "basis rows do not match the Casorati matrix");
  }
  Matrix current = Q;
  for (int i = 0; i < q; ++i) {
    const Matrix temporal = orthonormal_basis(S.transpose() * current);
    current = orthonormal_basis(S * temporal);
  }
  return current;
}

Matrix project_signal(const Matrix& S, const Matrix& Q) {
  if (Q.rows() != S.rows()) {
    throw Error(ErrorKind::Dimension, "basis has " + std::to_string(Q.rows()) + " rows, matrix has " +
                                          std::to_string(S.rows()));
  }
  const Matrix coeffs = Q.transpose() * S;
  return Q * coeffs;
}

SubspaceBasis signal_basis(const Matrix& S, std::size_t k, const RsvdOptions& opts) {
  require_finite(S, "Casorati matrix");
  const auto n_t = static_cast<std::size_t>(S.cols());
  if (k < 1 || k > n_t) {
    throw Error(ErrorKind::RankTooLarge, "rank k = " + std::to_string(k) + " outside [1, n_t = " +
                                             std::to_string(n_t) + "]");
  }
  const std::size_t p = clamp_oversample(k, opts.oversample, n_t);

  Matrix Q = orthonormal_basis(gaussian_sketch(S, k, p, opts.seed));
  Q = power_iteration_refine(S, Q, opts.power_iters);
  if (Q.cols() == 0) throw Error(ErrorKind::NoSignalSubspace, "Casorati matrix has no numerical range");

  // Rayleigh-Ritz: order the refined basis by the singular values of Q^T S
  // so the truncation keeps the dominant directions.
  const SvdFactors ritz = small_svd(Q.transpose() * S);
  const auto keep = static_cast<Eigen::Index>(std::min<std::size_t>(k, ritz.rank()));

  SubspaceBasis basis;
  basis.Q = Q * ritz.U.leftCols(keep);
  basis.k = static_cast<std::size_t>(keep);
  basis.seed = opts.seed;
  basis.q_iters = opts.power_iters;
  basis.p_oversample = p;
  basis.sigma = ritz.sigma;
  return basis;
}

SvdFactors randomized_svd(const Matrix& S, std::size_t rank, const RsvdOptions& opts) {
  require_finite(S, "Casorati matrix");
  const auto n_t = static_cast<std::size_t>(S.cols());
  if (rank < 1 || rank > n_t) {
    throw Error(ErrorKind::RankTooLarge, "rank " + std::to_string(rank) + " outside [1, " + std::to_string(n_t) + "]");
  }
  const std::size_t p = clamp_oversample(rank, opts.oversample, n_t);
  Matrix Q = orthonormal_basis(gaussian_sketch(S, rank, p, opts.seed));
  Q = power_iteration_refine(S, Q, opts.power_iters);
  if (Q.cols() == 0) throw Error(ErrorKind::NoSignalSubspace, "Casorati matrix has no numerical range");

  SvdFactors ritz = small_svd(Q.transpose() * S);
  const auto keep = static_cast<Eigen::Index>(std::min<std::size_t>(rank, ritz.rank()));
  SvdFactors out{Q * ritz.U.leftCols(keep), ritz.sigma.head(keep), ritz.V.leftCols(keep)};
  apply_sign_convention(out.U, out.V);
  return out;
}

Matrix rsvd_denoise(const Matrix& S, std::size_t k, const RsvdOptions& opts) {
  const SubspaceBasis basis = signal_basis(S, k, opts);
  return project_signal(S, basis.Q);
}

FrameStack rsvd_denoise(const FrameStack& fs, std::size_t k, const RsvdOptions& opts) {
  return from_casorati(rsvd_denoise(to_casorati(fs), k, opts), fs.meta());
}

}  // namespace stsvd
