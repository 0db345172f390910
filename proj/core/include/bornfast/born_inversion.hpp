#ifndef BORNFAST_BORN_INVERSION_HPP
#define BORNFAST_BORN_INVERSION_HPP

// Inversion of the Born series given a regularized inverse R of K_1:
//
//   fast          eta^(n+1) = eta^(n) - R K_2 (eta^(n) - eta^(n-1)) x eta^(1)
//   newton        eta^(n+1) = eta^(n) - R (K eta^(n) - phi)
//   ibs           eta = sum_j eta_j, eta_j from the full composition recursion
//   reduced_ibs   eta = sum_j eta~_j, one dominant composition per order
//   hoskins       eta = sum_j eta^_j, eta^_j = -R K_2 (eta^_{j-1} x eta_1)
//
// All schemes start from eta^(0) = 0 and share eta^(1) = R phi.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bornfast/fields.hpp"
#include "bornfast/forward_model.hpp"
#include "bornfast/linalg.hpp"

namespace bornfast::inversion {

class InversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the nonlinear forward solve fails at some Newton iterate.
class ForwardSolveError : public InversionError {
 public:
  ForwardSolveError(const std::string& what, int iterate)
      : InversionError(what), iterate_(iterate) {}
  int iterate() const noexcept { return iterate_; }

 private:
  int iterate_;
};

enum class Method { fast, ibs, reduced_ibs, hoskins_reduced, newton };

std::string_view method_name(Method m);
/// Accepts the CLI spellings fast|ibs|reduced|hoskins|newton.
Method parse_method(std::string_view name);

struct NewtonForward {
  /// Empty: the model's forward_map.  Otherwise the Born series truncated
  /// after this many terms.
  std::optional<int> series_terms;
};

struct InversionConfig {
  Method method = Method::fast;
  int order = 5;
  NewtonForward newton_forward;
  /// Stop early once the sup-norm update drops to this value; 0 runs all orders.
  double tolerance = 0.0;
  /// Evaluate ||forward_map(iterate) - phi|| after each order.
  bool compute_residuals = false;
  /// Orders above this are rejected for the full inverse Born series.
  int ibs_order_guard = 8;
};

struct IterationTrace {
  Method method = Method::fast;
  int order = 0;
  /// eta^(0) = 0, eta^(1), ..., one entry per completed order.  Series methods
  /// store partial sums.
  std::vector<MaterialField> iterates;
  /// sup-norm of iterates[n] - iterates[n-1], n >= 1.
  std::vector<double> update_norms;
  std::vector<double> residual_norms;
  /// Cumulative logical kernel applications after each order: K_2-equivalent
  /// applications for fast/reduced/hoskins, forward evaluations for newton,
  /// composition terms for ibs.
  std::vector<std::uint64_t> kernel_applications;
  /// Cumulative wall time after each order, milliseconds.
  std::vector<double> wall_ms;
  std::vector<std::string> warnings;
  bool diverging = false;

  const MaterialField& final_iterate() const { return iterates.back(); }
};

MaterialField eta_projection(const linalg::RegularizedInverse& pinv, const ForwardModel& model,
                             const MaterialField& eta_true);

/// Dense N x N matrix of the fast update, B = -R K_2(. x eta1).
linalg::DenseMatrix fast_update_matrix(const ForwardModel& model,
                                       const linalg::RegularizedInverse& pinv,
                                       const MaterialField& eta1);

IterationTrace fast_iterate(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                            const BoundaryData& phi, int order,
                            const InversionConfig& config = {});

IterationTrace newton_iterate(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                              const BoundaryData& phi, int order,
                              const InversionConfig& config = {});

/// Work done by the full inverse Born series.
struct IbsCounters {
  /// Top-level composition terms evaluated at each order j (index j - 1);
  /// equals 2^(j-1) - 1 for j >= 2 and 0 for j = 1.
  std::vector<std::uint64_t> compositions_per_order;
  /// Every K_i application, including those inside recursive calls.
  std::uint64_t forward_operator_applications = 0;
};

struct IbsOptions {
  int order_guard = 8;
};

/// eta_1 .. eta_max_order of the inverse Born series.
std::vector<MaterialField> ibs_terms(const ForwardModel& model,
                                     const linalg::RegularizedInverse& pinv,
                                     const BoundaryData& phi, int max_order,
                                     IbsCounters* counters = nullptr, const IbsOptions& opts = {});

/// The multilinear inverse operator applied to distinct boundary data,
/// R_j(phi_1, ..., phi_j) with j = data.size().
MaterialField ibs_operator(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                           std::span<const BoundaryData> data, IbsCounters* counters = nullptr);

enum class ReducedVariant {
  /// R~_j = -(R~_{j-1} K_2 x K_1^{x(j-2)}) R^{xj}
  dominant_composition,
  /// R^_j = -R K_2 (R^_{j-1} x R^_1)
  hoskins,
};

struct ReducedCounters {
  std::uint64_t k2_applications = 0;
  std::uint64_t k1_applications = 0;
};

std::vector<MaterialField> reduced_ibs_terms(const ForwardModel& model,
                                             const linalg::RegularizedInverse& pinv,
                                             const BoundaryData& phi, int max_order,
                                             ReducedVariant variant,
                                             ReducedCounters* counters = nullptr);

/// Runs the configured method for config.order orders.
IterationTrace run_inversion(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                             const BoundaryData& phi, const InversionConfig& config);

struct ConvergenceDiagnostics {
  double h = 0.0;                  // ||R phi||_sup
  double mu = 0.0;
  double nu = 0.0;
  double pinv_norm = 0.0;          // ||R||_2
  double reduced_criterion = 0.0;  // mu ||phi|| / nu
  double fast_criterion = 0.0;     // ||R K_2(. x R phi)||_2, estimates ||R K_2|| h
  double projection_defect = 0.0;  // ||(R K_1 - I) R K_1||_2
};

ConvergenceDiagnostics diagnostics(const ForwardModel& model,
                                   const linalg::RegularizedInverse& pinv,
                                   const BoundaryData& phi);

/// Number of compositions of j into m positive parts, C(j-1, m-1).
std::uint64_t composition_count(int j, int m);

}  // namespace bornfast::inversion

#endif  // BORNFAST_BORN_INVERSION_HPP
