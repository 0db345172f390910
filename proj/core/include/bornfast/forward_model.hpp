#ifndef BORNFAST_FORWARD_MODEL_HPP
#define BORNFAST_FORWARD_MODEL_HPP

#include <atomic>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "bornfast/fields.hpp"
#include "bornfast/linalg.hpp"

namespace bornfast {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete surrogates of the kernel bounds used by the convergence
/// diagnostics: mu bounds the interior kernel, nu its boundary trace.
struct GreenNorms {
  double mu = 0.0;
  double nu = 0.0;
};

/// Capability set shared by every Born forward model: the linearized operator
/// K_1 as a matrix, the multilinear operators K_j, and the full nonlinear map.
///
/// Field arguments of K_j are ordered from the detector side inward: slot 0 is
/// the factor adjacent to the measurement, slot j-1 the one adjacent to the
/// incident field.
class ForwardModel {
 public:
  ForwardModel() = default;
  ForwardModel(const ForwardModel&) = delete;
  ForwardModel& operator=(const ForwardModel&) = delete;
  virtual ~ForwardModel() = default;

  virtual std::size_t field_size() const = 0;
  virtual std::size_t data_size() const = 0;
  virtual const linalg::DenseMatrix& k1_matrix() const = 0;

  /// K_j(fields[0], ..., fields[j-1]) with j = fields.size() >= 1.  Adds j to
  /// the kernel-application counter.
  BoundaryData apply_kj(std::span<const MaterialField> fields) const;

  /// The linear map delta -> K_2(delta, second) as a data_size x field_size
  /// matrix.  Adds 2 to the kernel-application counter.
  linalg::DenseMatrix k2_first_slot_matrix(const MaterialField& second) const;

  /// Full nonlinear data K(eta), without series truncation unless the model
  /// is defined as a truncated series.
  virtual BoundaryData forward_map(const MaterialField& eta) const = 0;

  virtual GreenNorms green_norms() const = 0;

  std::uint64_t kernel_applications() const noexcept { return counter_.load(); }
  void reset_kernel_applications() const noexcept { counter_.store(0); }

 protected:
  virtual BoundaryData do_apply_kj(std::span<const MaterialField> fields) const = 0;
  /// Default builds the matrix column by column from do_apply_kj.
  virtual linalg::DenseMatrix do_k2_first_slot_matrix(const MaterialField& second) const;

  void check_field(const MaterialField& f) const;

 private:
  mutable std::atomic<std::uint64_t> counter_{0};
};

}  // namespace bornfast

#endif  // BORNFAST_FORWARD_MODEL_HPP
