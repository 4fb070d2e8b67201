#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mlcspg/multiindex.hpp"

namespace mlcspg {

/// Values with |t| <= 1 + this are clamped onto [-1, 1].
inline constexpr double kDomainTolerance = 1e-12;

/// Orthonormal Chebyshev polynomial: T_0 = 1, T_j(t) = sqrt(2) cos(j arccos t).
/// Throws DomainError if |t| > 1 + kDomainTolerance.
double cheb_univariate(std::uint32_t j, double t);

/// prod over supp(nu) of T_{nu_j}(y_j). Throws DimensionError if nu uses a
/// coordinate beyond y.size().
double cheb_tensor(const MultiIndex& nu, std::span<const double> y);

/// i.i.d. points from the product arcsine (Chebyshev) measure on [-1, 1]^d.
struct SampleBatch {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t dim = 0;
  std::vector<double> coords;  // row-major, count() x dim

  std::size_t count() const noexcept { return dim ? coords.size() / dim : 0; }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

/// Maps a uniform U in (0, 1) to the arcsine law, y = cos(pi U).
double arcsine_from_uniform(double u);

/// Draws m points of dimension d. Coordinate (i, j) depends only on
/// (seed, stream, i, j), so batches are reproducible and prefix-nested:
/// the first k points of a batch of size m equal a batch of size k.
SampleBatch sample_measure(std::uint64_t seed, std::size_t d, std::size_t m, std::uint64_t stream = 0);

/// CSV export: `# seed=..,stream=..,d=..` header, column names y_1..y_d, one row per point.
void write_sample_batch_csv(std::ostream& os, const SampleBatch& batch);

struct SensingMatrix {
  Eigen::MatrixXd values;  // rows = samples, cols = candidate indices
  std::vector<MultiIndex> columns;
};

/// Phi(i, k) = T_{columns[k]}(y^(i)). Rows are filled independently, in
/// parallel when threads > 1.
SensingMatrix build_sensing_matrix(const SampleBatch& batch, const std::vector<MultiIndex>& columns,
                                   unsigned threads = 1);

/// Evaluates sum_k coeffs[k] T_{indices[k]}(y) using a per-call table of
/// univariate values.
double evaluate_expansion(const std::vector<MultiIndex>& indices, std::span<const double> coeffs,
                          std::span<const double> y);

}  // namespace mlcspg
