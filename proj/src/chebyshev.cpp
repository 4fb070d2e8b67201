#include "mlcspg/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "mlcspg/errors.hpp"
#include "mlcspg/parallel.hpp"
#include "mlcspg/rng.hpp"

namespace mlcspg {

namespace {

double clamp_to_domain(double t) {
  if (!(std::abs(t) <= 1.0 + kDomainTolerance))
    throw DomainError("Chebyshev argument " + std::to_string(t) + " outside [-1, 1]");
  return std::clamp(t, -1.0, 1.0);
}

// Angles and the largest degree needed per coordinate, then a flat table
// table[j * stride + k] = T_k(y_j).
struct UnivariateTable {
  std::size_t stride = 1;
  std::vector<double> values;

  UnivariateTable(std::span<const double> y, std::uint32_t max_degree) : stride(max_degree + 1) {
    values.resize(y.size() * stride);
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double theta = std::acos(clamp_to_domain(y[j]));
      double* row = values.data() + j * stride;
      row[0] = 1.0;
      for (std::uint32_t k = 1; k <= max_degree; ++k) row[k] = std::numbers::sqrt2 * std::cos(k * theta);
    }
  }

  double product(const MultiIndex& nu) const {
    double v = 1.0;
    for (const auto& [j, k] : nu.entries()) v *= values[(j - 1) * stride + k];
    return v;
  }
};

std::uint32_t max_degree_of(const std::vector<MultiIndex>& indices, std::size_t dim) {
  std::uint32_t m = 0;
  for (const auto& nu : indices) {
    if (nu.max_dim() > dim)
      throw DimensionError("multi-index " + to_string(nu) + " references a coordinate beyond dimension " +
                           std::to_string(dim));
    m = std::max(m, nu.max_degree());
  }
  return m;
}

}  // namespace

double cheb_univariate(std::uint32_t j, double t) {
  const double x = clamp_to_domain(t);
  if (j == 0) return 1.0;
  return std::numbers::sqrt2 * std::cos(j * std::acos(x));
}

double cheb_tensor(const MultiIndex& nu, std::span<const double> y) {
  if (nu.max_dim() > y.size())
    throw DimensionError("multi-index " + to_string(nu) + " references a coordinate beyond dimension " +
                         std::to_string(y.size()));
  double v = 1.0;
  for (const auto& [j, k] : nu.entries()) v *= cheb_univariate(k, y[j - 1]);
  return v;
}

double arcsine_from_uniform(double u) { return std::cos(std::numbers::pi * u); }

SampleBatch sample_measure(std::uint64_t seed, std::size_t d, std::size_t m, std::uint64_t stream) {
  SampleBatch b;
  b.seed = seed;
  b.stream = stream;
  b.dim = d;
  b.coords.resize(d * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j)
      b.coords[i * d + j] = arcsine_from_uniform(counter_uniform(seed, stream, i, j));
  return b;
}

void write_sample_batch_csv(std::ostream& os, const SampleBatch& batch) {
  const auto old = os.precision(17);
  os << "# seed=" << batch.seed << ",stream=" << batch.stream << ",d=" << batch.dim << '\n';
  for (std::size_t j = 0; j < batch.dim; ++j) os << (j ? "," : "") << "y_" << (j + 1);
  os << '\n';
  for (std::size_t i = 0; i < batch.count(); ++i) {
    auto p = batch.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) os << (j ? "," : "") << p[j];
    os << '\n';
  }
  os.precision(old);
}

SensingMatrix build_sensing_matrix(const SampleBatch& batch, const std::vector<MultiIndex>& columns,
                                   unsigned threads) {
  const std::uint32_t maxdeg = max_degree_of(columns, batch.dim);
  SensingMatrix s;
  s.columns = columns;
  s.values.resize(static_cast<Eigen::Index>(batch.count()), static_cast<Eigen::Index>(columns.size()));
  parallel_for(batch.count(), threads, [&](std::size_t i) {
    const UnivariateTable table(batch.point(i), maxdeg);
    for (std::size_t k = 0; k < columns.size(); ++k)
      s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = table.product(columns[k]);
  });
  return s;
}

double evaluate_expansion(const std::vector<MultiIndex>& indices, std::span<const double> coeffs,
                          std::span<const double> y) {
  const UnivariateTable table(y, max_degree_of(indices, y.size()));
  double sum = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k)
    if (coeffs[k] != 0.0) sum += coeffs[k] * table.product(indices[k]);
  return sum;
}

}  // namespace mlcspg
