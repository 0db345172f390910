#ifndef BORNFAST_FIELDS_HPP
#define BORNFAST_FIELDS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace bornfast {

/// Perturbation eta sampled on the model's field grid.
struct MaterialField {
  std::vector<double> values;

  MaterialField() = default;
  explicit MaterialField(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit MaterialField(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> view() const noexcept { return values; }
};

/// Boundary measurements phi, one entry per source mode.
struct BoundaryData {
  std::vector<double> values;

  BoundaryData() = default;
  explicit BoundaryData(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit BoundaryData(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> view() const noexcept { return values; }
};

double sup_norm(std::span<const double> x);
double l2_norm(std::span<const double> x);
double max_abs_difference(std::span<const double> a, std::span<const double> b);

std::vector<double> subtract(std::span<const double> a, std::span<const double> b);
std::vector<double> add(std::span<const double> a, std::span<const double> b);
std::vector<double> scaled(std::span<const double> a, double s);

/// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);

}  // namespace bornfast

#endif  // BORNFAST_FIELDS_HPP
