#include "bornfast/finite_model.hpp"

#include <cmath>

namespace bornfast {

FiniteBornModel::FiniteBornModel(linalg::DenseMatrix a, int series_terms)
    : a_(std::move(a)), series_terms_(series_terms) {
  if (a_.empty() || a_.rows() != a_.cols()) {
    throw ModelError("FiniteBornModel: matrix must be square and non-empty");
  }
  if (!a_.all_finite()) throw ModelError("FiniteBornModel: matrix has non-finite entries");
  if (series_terms_ < 1) throw ModelError("FiniteBornModel: series_terms must be >= 1");
}

FiniteBornModel FiniteBornModel::reference_example() {
  return FiniteBornModel(linalg::DenseMatrix::from_rows({{0.1, 0.2}, {0.3, 0.4}}), 5);
}

MaterialField FiniteBornModel::reference_truth() { return MaterialField(std::vector<double>{0.07, 0.08}); }

std::vector<BoundaryData> FiniteBornModel::forward_terms(const MaterialField& x, int count) const {
  check_field(x);
  std::vector<BoundaryData> terms;
  if (count < 1) return terms;
  terms.emplace_back(linalg::multiply(a_, x.values));
  std::vector<double> weighted(x.size());
  for (int n = 2; n <= count; ++n) {
    const auto& prev = terms.back().values;
    for (std::size_t j = 0; j < x.size(); ++j) weighted[j] = x.values[j] * prev[j];
    std::vector<double> next = linalg::multiply(a_, weighted);
    for (double& v : next) v = -v;
    terms.emplace_back(std::move(next));
  }
  return terms;
}

BoundaryData FiniteBornModel::forward_map(const MaterialField& x) const {
  BoundaryData sum(data_size());
  for (const auto& t : forward_terms(x, series_terms_)) axpy(1.0, t.values, sum.values);
  return sum;
}

BoundaryData FiniteBornModel::do_apply_kj(std::span<const MaterialField> fields) const {
  // Innermost slot first: K_1 xi_j, then wrap outward.
  std::vector<double> acc = linalg::multiply(a_, fields.back().values);
  std::vector<double> weighted(acc.size());
  for (std::size_t slot = fields.size() - 1; slot-- > 0;) {
    const auto& xi = fields[slot].values;
    for (std::size_t j = 0; j < acc.size(); ++j) weighted[j] = xi[j] * acc[j];
    acc = linalg::multiply(a_, weighted);
    for (double& v : acc) v = -v;
  }
  return BoundaryData(std::move(acc));
}

linalg::DenseMatrix FiniteBornModel::do_k2_first_slot_matrix(const MaterialField& second) const {
  // K_2(delta, b) = -A diag(A b) delta
  const std::vector<double> ab = linalg::multiply(a_, second.values);
  linalg::DenseMatrix out(a_.rows(), a_.cols());
  for (std::size_t i = 0; i < a_.rows(); ++i)
    for (std::size_t j = 0; j < a_.cols(); ++j) out(i, j) = -a_(i, j) * ab[j];
  return out;
}

GreenNorms FiniteBornModel::green_norms() const {
  // A stands in for both the interior kernel and its boundary trace; the
  // support measure is the counting measure on the n components.
  GreenNorms g;
  for (double v : a_.entries()) g.mu = std::max(g.mu, std::abs(v));
  for (std::size_t j = 0; j < a_.cols(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < a_.rows(); ++i) col += a_(i, j) * a_(i, j);
    g.nu = std::max(g.nu, std::sqrt(col));
  }
  g.nu *= std::sqrt(static_cast<double>(a_.cols()));
  return g;
}

}  // namespace bornfast
