#ifndef BORNFAST_RADIAL_MODEL_HPP
#define BORNFAST_RADIAL_MODEL_HPP

// Two-dimensional radially symmetric diffusion testbed on a disk of radius R
// with Robin boundary, illuminated by angular modes e^{i m theta} on the rim
// and observed at (R, 0).
//
// Every boundary quantity (forward data and the operators K_j) carries the
// same overall factor R, so the exact data and the Born series agree.

#include <memory>
#include <vector>

#include "bornfast/fields.hpp"
#include "bornfast/forward_model.hpp"
#include "bornfast/linalg.hpp"

namespace bornfast::radial {

struct ModelParams {
  double k = 1.0;         // wavenumber, alpha_0 = k^2
  double radius_r = 3.0;  // disk radius R
  double radius_a = 1.5;  // inclusion radius a
  double eta_a = 0.2;     // inclusion contrast
  double beta = 3.0;      // Robin coefficient
  int modes = 90;         // M_S, sources m = 1..M_S
  int grid_n = 90;        // N_r
  unsigned threads = 1;   // 0 = hardware concurrency

  /// Throws ModelError naming the first violated constraint.
  void validate() const;
};

/// Midpoint grid: r_j = (j - 1/2) dr, dr = R / N_r, j = 1..N_r.
struct RadialGrid {
  int n = 0;
  double dr = 0.0;
  std::vector<double> nodes;

  static RadialGrid midpoint(double radius, int n);
  /// Quadrature weights r_j * dr.
  std::vector<double> weights() const;
};

/// eta_a on nodes with r <= a, zero elsewhere.
MaterialField ground_truth(const ModelParams& params, const RadialGrid& grid);

/// Radial Green's function g_m(r, r') for the Robin disk.
double greens_radial(int m, double r, double rp, const ModelParams& params);

/// Boundary trace g~_m(r) = g_m(r, R) = I_m(kr) / (R (beta I_m(kR) + k I'_m(kR))).
double greens_boundary_trace(int m, double r, const ModelParams& params);

/// |d_r g_m(R, r') + beta g_m(R, r')| / |g_m(R, r')| using analytic derivatives.
double greens_robin_relative_residual(int m, double rp, const ModelParams& params);

struct TransmissionCoefficients {
  double a = 0.0;  // interior amplitude of I_m(sqrt(1 + eta_a) k r)
  double b = 0.0;  // exterior K_m(kr) amplitude
  double c = 0.0;  // exterior I_m(kr) amplitude
  double relative_residual = 0.0;
};

/// Solves the 3x3 interface/boundary system for mode m (equilibrated LU).
TransmissionCoefficients transmission_coefficients(int m, const ModelParams& params);

/// Interface mismatch of the transmission solution at r = a:
/// relative |v - w| and relative |v' - w'|.
struct InterfaceMismatch {
  double value = 0.0;
  double flux = 0.0;
};
InterfaceMismatch interface_mismatch(int m, const ModelParams& params,
                                     const TransmissionCoefficients& coeffs);

/// Exact data for the piecewise-constant inclusion, modes 1..M_S.
///
/// phi(m) = R (g_m(R, R) - w_m(R)), evaluated through the scattered-field
/// amplitude so that tiny high-mode values keep full relative precision.
BoundaryData forward_exact(const ModelParams& params);

/// Same quantity through the 3x3 coefficients, R (g_m(R,R) - I K - b K - c I).
/// Subject to cancellation at high modes; kept as an independent check.
double forward_exact_direct(int m, const ModelParams& params);

class RadialForwardModel final : public ForwardModel {
 public:
  explicit RadialForwardModel(const ModelParams& params);

  const ModelParams& params() const noexcept { return params_; }
  const RadialGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// g_m(r_i, r_j) for source mode m in 1..M_S.
  const linalg::DenseMatrix& greens_interior(int m) const;
  /// g~_m(r_j), rows indexed by m - 1.
  const linalg::DenseMatrix& greens_boundary() const noexcept { return greens_boundary_; }
  /// u_0 restricted to the grid equals g~_m.
  std::span<const double> u0_trace(int m) const;

  std::size_t field_size() const override { return static_cast<std::size_t>(grid_.n); }
  std::size_t data_size() const override { return static_cast<std::size_t>(params_.modes); }
  const linalg::DenseMatrix& k1_matrix() const override { return k1_; }

  /// Solves (I - T_m) u_m = u_0 per mode, then
  /// phi(m) = k^2 R sum_j g~_m(r_j) eta_j u_m(r_j) r_j dr.
  BoundaryData forward_map(const MaterialField& eta) const override;

  GreenNorms green_norms() const override;

 protected:
  BoundaryData do_apply_kj(std::span<const MaterialField> fields) const override;
  linalg::DenseMatrix do_k2_first_slot_matrix(const MaterialField& second) const override;

 private:
  ModelParams params_;
  RadialGrid grid_;
  std::vector<double> weights_;
  std::vector<linalg::DenseMatrix> greens_;
  linalg::DenseMatrix greens_boundary_;
  linalg::DenseMatrix k1_;
};

std::unique_ptr<RadialForwardModel> assemble_model(const ModelParams& params);

}  // namespace bornfast::radial

#endif  // BORNFAST_RADIAL_MODEL_HPP
