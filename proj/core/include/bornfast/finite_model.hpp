#ifndef BORNFAST_FINITE_MODEL_HPP
#define BORNFAST_FINITE_MODEL_HPP

#include <vector>

#include "bornfast/forward_model.hpp"
#include "bornfast/linalg.hpp"

namespace bornfast {

/// Finite-dimensional Born series over a square matrix A:
///   y_1 = A x,   {y_n}_i = -sum_j A_ij x_j {y_{n-1}}_j.
/// The multilinear operators follow the same recursion with one argument per
/// slot: K_1 xi = A xi and K_j(xi_1, ..., xi_j) = -A (xi_1 .* K_{j-1}(xi_2, ..., xi_j)).
class FiniteBornModel final : public ForwardModel {
 public:
  /// `series_terms` is the truncation used by forward_map.
  explicit FiniteBornModel(linalg::DenseMatrix a, int series_terms = 5);

  /// The 2x2 example with A = [[0.1, 0.2], [0.3, 0.4]].
  static FiniteBornModel reference_example();
  /// x = (0.07, 0.08) paired with reference_example().
  static MaterialField reference_truth();

  std::size_t dimension() const noexcept { return a_.rows(); }
  const linalg::DenseMatrix& a_matrix() const noexcept { return a_; }
  int series_terms() const noexcept { return series_terms_; }

  /// y_1 .. y_count.
  std::vector<BoundaryData> forward_terms(const MaterialField& x, int count) const;

  std::size_t field_size() const override { return a_.cols(); }
  std::size_t data_size() const override { return a_.rows(); }
  const linalg::DenseMatrix& k1_matrix() const override { return a_; }
  BoundaryData forward_map(const MaterialField& x) const override;
  GreenNorms green_norms() const override;

 protected:
  BoundaryData do_apply_kj(std::span<const MaterialField> fields) const override;
  linalg::DenseMatrix do_k2_first_slot_matrix(const MaterialField& second) const override;

 private:
  linalg::DenseMatrix a_;
  int series_terms_;
};

}  // namespace bornfast

#endif  // BORNFAST_FINITE_MODEL_HPP
