#ifndef BORNFAST_TOOLS_COMMANDS_HPP
#define BORNFAST_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bornfast/born_inversion.hpp"
#include "bornfast/fields.hpp"
#include "bornfast/linalg.hpp"
#include "bornfast/radial_model.hpp"

namespace bornfast::cli {

struct RunConfig {
  radial::ModelParams model;
  int rank = 23;
  int order = 5;
  inversion::Method method = inversion::Method::fast;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::filesystem::path output_dir = ".";

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Sets one RunConfig field from text.  Keys are the field names (k,
/// radius_r, radius_a, eta_a, beta, modes, grid_n, threads, rank, order,
/// method, seed, noise_sigma, output_dir).
void set_field(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat `key = value` file; blank lines and lines starting with '#' ignored.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

std::string format_double(double v);

void write_phi_csv(const std::filesystem::path& path, const BoundaryData& phi);
BoundaryData read_phi_csv(const std::filesystem::path& path);
void write_field_csv(const std::filesystem::path& path, const std::vector<double>& nodes,
                     const MaterialField& eta);
/// Rows of numbers separated by commas or whitespace.
linalg::DenseMatrix read_matrix_file(const std::filesystem::path& path);

struct ToyOptions {
  int order = 5;
  std::optional<std::filesystem::path> matrix_file;
  std::vector<double> x;
};

struct GoldenRow {
  double first;
  double second;
};
/// Printed iterates of the 2x2 example; fast iterates and inverse Born series
/// partial sums share them.
const std::vector<GoldenRow>& toy_golden();

int cmd_toy(const ToyOptions& opts, std::ostream& out);
int cmd_forward(const RunConfig& cfg, std::ostream& out);
int cmd_invert(const RunConfig& cfg, const std::optional<std::filesystem::path>& phi_file,
               std::ostream& out);
int cmd_bench(const RunConfig& cfg, std::ostream& out);

/// Phi from forward_exact plus optional seeded Gaussian noise.
BoundaryData generate_phi(const RunConfig& cfg);

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace bornfast::cli

#endif  // BORNFAST_TOOLS_COMMANDS_HPP
