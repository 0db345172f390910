#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bornfast/finite_model.hpp"

namespace bornfast::cli {

namespace fs = std::filesystem;
using inversion::Method;

namespace {

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw std::invalid_argument(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int v{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw std::invalid_argument(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> split_numbers(const std::string& line, const std::string& context) {
  std::string cleaned = line;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream in(cleaned);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(context, tok));
  return out;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return f;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void print_diagnostics(const inversion::ConvergenceDiagnostics& d, std::ostream& out) {
  out << "diagnostics: h=" << format_double(d.h) << " mu=" << format_double(d.mu)
      << " nu=" << format_double(d.nu) << " |R|=" << format_double(d.pinv_norm)
      << " reduced_criterion=" << format_double(d.reduced_criterion)
      << " fast_criterion=" << format_double(d.fast_criterion)
      << " projection_defect=" << format_double(d.projection_defect) << "\n";
}

}  // namespace

void RunConfig::validate() const {
  try {
    model.validate();
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());
  }
  if (rank < 1) throw std::invalid_argument("rank must be >= 1");
  if (rank > std::min(model.modes, model.grid_n)) {
    throw std::invalid_argument("rank must not exceed min(modes, grid_n)");
  }
  if (order < 1) throw std::invalid_argument("order must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw std::invalid_argument("noise_sigma must be >= 0");
  }
}

void set_field(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "k") cfg.model.k = parse_double(key, value);
  else if (key == "radius_r") cfg.model.radius_r = parse_double(key, value);
  else if (key == "radius_a") cfg.model.radius_a = parse_double(key, value);
  else if (key == "eta_a") cfg.model.eta_a = parse_double(key, value);
  else if (key == "beta") cfg.model.beta = parse_double(key, value);
  else if (key == "modes") cfg.model.modes = parse_int<int>(key, value);
  else if (key == "grid_n") cfg.model.grid_n = parse_int<int>(key, value);
  else if (key == "threads") cfg.model.threads = parse_int<unsigned>(key, value);
  else if (key == "rank") cfg.rank = parse_int<int>(key, value);
  else if (key == "order") cfg.order = parse_int<int>(key, value);
  else if (key == "method") {
    try {
      cfg.method = inversion::parse_method(value);
    } catch (const std::exception& e) {
      throw std::invalid_argument(e.what());
    }
  } else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "noise_sigma") cfg.noise_sigma = parse_double(key, value);
  else if (key == "output_dir") cfg.output_dir = value;
  else throw std::invalid_argument("unknown configuration key '" + key + "'");
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file '" + path.string() + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    }
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_phi_csv(const fs::path& path, const BoundaryData& phi) {
  auto f = open_output(path);
  f << "m,phi\n";
  for (std::size_t i = 0; i < phi.size(); ++i) f << (i + 1) << ',' << format_double(phi.values[i]) << '\n';
}

BoundaryData read_phi_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "m,phi") {
    throw std::invalid_argument(path.string() + ": expected header 'm,phi'");
  }
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto row = split_numbers(line, path.string());
    if (row.size() != 2 || row[0] != static_cast<double>(values.size() + 1)) {
      throw std::invalid_argument(path.string() + ": malformed row '" + line + "'");
    }
    values.push_back(row[1]);
  }
  return BoundaryData(std::move(values));
}

void write_field_csv(const fs::path& path, const std::vector<double>& nodes,
                     const MaterialField& eta) {
  auto f = open_output(path);
  f << "r,eta\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    f << format_double(nodes[i]) << ',' << format_double(eta.values[i]) << '\n';
  }
}

linalg::DenseMatrix read_matrix_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read matrix file '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    rows.push_back(split_numbers(t, path.string()));
  }
  if (rows.empty()) throw std::invalid_argument(path.string() + ": empty matrix");
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw std::invalid_argument(path.string() + ": matrix must be square");
  }
  return linalg::DenseMatrix::from_rows(rows);
}

const std::vector<GoldenRow>& toy_golden() {
  static const std::vector<GoldenRow> rows{{0.0684578, 0.0759273},
                                           {0.0699660, 0.0797927},
                                           {0.0699993, 0.0799895},
                                           {0.0700000, 0.0799995},
                                           {0.0700000, 0.0800000}};
  return rows;
}

int cmd_toy(const ToyOptions& opts, std::ostream& out) {
  if (opts.order < 1) throw std::invalid_argument("order must be >= 1");
  const bool golden = !opts.matrix_file;
  FiniteBornModel model = golden ? FiniteBornModel::reference_example()
                                 : FiniteBornModel(read_matrix_file(*opts.matrix_file));
  MaterialField x;
  if (!opts.x.empty()) x = MaterialField(opts.x);
  else if (model.dimension() == 2) x = FiniteBornModel::reference_truth();
  else throw std::invalid_argument("--x is required for a matrix of dimension != 2");
  if (x.size() != model.dimension()) throw std::invalid_argument("--x length does not match the matrix");

  const auto n = model.dimension();
  const auto pinv = linalg::truncated_pinv(model.k1_matrix(), n);
  const BoundaryData y = model.forward_map(x);

  inversion::InversionConfig cfg;
  cfg.order = opts.order;
  cfg.method = Method::fast;
  const auto fast = inversion::run_inversion(model, pinv, y, cfg);
  cfg.method = Method::ibs;
  const auto ibs = inversion::run_inversion(model, pinv, y, cfg);
  cfg.method = Method::hoskins_reduced;
  const auto hoskins = inversion::run_inversion(model, pinv, y, cfg);

  out << "y =";
  for (double v : y.values) out << ' ' << format_double(v);
  out << "\n";

  auto print_table = [&](const char* title, const inversion::IterationTrace& t) {
    out << title << "\n";
    for (int k = 1; k <= t.order; ++k) {
      out << "  " << k << ":";
      for (double v : t.iterates[static_cast<std::size_t>(k)].values) {
        char buf[32];
        std::snprintf(buf, sizeof buf, " %.7f", v);
        out << buf;
      }
      out << "\n";
    }
  };
  print_table("fast iterates x^(n)", fast);
  print_table("inverse Born series partial sums", ibs);

  if (golden) {
    const auto& g = toy_golden();
    const int checked = std::min<int>(opts.order, static_cast<int>(g.size()));
    int matched = 0;
    std::ostringstream diffs;
    for (int k = 1; k <= checked; ++k) {
      const auto& row = g[static_cast<std::size_t>(k - 1)];
      for (const auto* t : {&fast, &ibs}) {
        const auto& v = t->iterates[static_cast<std::size_t>(k)].values;
        const double dev = std::max(std::abs(v[0] - row.first), std::abs(v[1] - row.second));
        if (dev <= 1e-6) {
          ++matched;
        } else {
          diffs << "  " << (t == &fast ? "fast" : "ibs ") << " order " << k << ": got ("
                << format_double(v[0]) << ", " << format_double(v[1]) << ") expected ("
                << format_double(row.first) << ", " << format_double(row.second)
                << ") deviation " << format_double(dev) << "\n";
        }
      }
    }
    if (matched != 2 * checked) {
      out << "FAIL: " << matched << " of " << 2 * checked << " vectors matched\n" << diffs.str();
      return 1;
    }
    out << "PASS: " << matched << " vectors matched\n";
    return 0;
  }

  double worst = 0.0;
  for (int k = 1; k <= opts.order; ++k) {
    const auto& f = fast.iterates[static_cast<std::size_t>(k)].values;
    worst = std::max(worst, max_abs_difference(f, ibs.iterates[static_cast<std::size_t>(k)].values));
    worst = std::max(worst, max_abs_difference(f, hoskins.iterates[static_cast<std::size_t>(k)].values));
  }
  out << "max |fast - ibs|, |fast - hoskins| over orders: " << format_double(worst) << "\n";
  if (worst > 1e-12) {
    out << "FAIL: schemes disagree beyond 1e-12\n";
    return 1;
  }
  out << "PASS: schemes agree\n";
  return 0;
}

BoundaryData generate_phi(const RunConfig& cfg) {
  BoundaryData phi = radial::forward_exact(cfg.model);
  if (cfg.noise_sigma > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (double& v : phi.values) v += noise(rng);
  }
  return phi;
}

int cmd_forward(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const BoundaryData phi = generate_phi(cfg);
  const fs::path path = cfg.output_dir / "phi.csv";
  write_phi_csv(path, phi);
  out << "wrote " << path.string() << " (" << phi.size() << " modes, |phi|_2 = "
      << format_double(l2_norm(phi.values)) << ")\n";
  return 0;
}

int cmd_invert(const RunConfig& cfg, const std::optional<fs::path>& phi_file, std::ostream& out) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const auto model = radial::assemble_model(cfg.model);
  const BoundaryData phi = phi_file ? read_phi_csv(*phi_file) : generate_phi(cfg);
  if (phi.size() != model->data_size()) {
    throw std::invalid_argument("phi has " + std::to_string(phi.size()) + " modes, model has " +
                                std::to_string(model->data_size()));
  }
  const auto pinv = linalg::truncated_pinv(model->k1_matrix(), static_cast<std::size_t>(cfg.rank));
  const MaterialField truth = radial::ground_truth(cfg.model, model->grid());
  const MaterialField proj = inversion::eta_projection(pinv, *model, truth);
  const auto& nodes = model->grid().nodes;

  inversion::InversionConfig icfg;
  icfg.method = cfg.method;
  icfg.order = cfg.order;
  icfg.compute_residuals = true;
  inversion::IterationTrace trace;
  try {
    trace = inversion::run_inversion(*model, pinv, phi, icfg);
  } catch (const inversion::ForwardSolveError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }

  const std::string name(inversion::method_name(cfg.method));
  for (int n = 1; n <= trace.order; ++n) {
    const auto& eta = trace.iterates[static_cast<std::size_t>(n)];
    if (!all_finite(eta.values)) {
      std::cerr << "error: non-finite reconstruction at order " << n << "\n";
      return 3;
    }
    write_field_csv(cfg.output_dir / ("recon_" + name + "_" + std::to_string(n) + ".csv"), nodes, eta);
  }
  write_field_csv(cfg.output_dir / "eta_proj.csv", nodes, proj);

  const auto diag = inversion::diagnostics(*model, pinv, phi);
  nlohmann::ordered_json j;
  j["method"] = name;
  j["order"] = trace.order;
  j["update_norms"] = trace.update_norms;
  j["residual_norms"] = trace.residual_norms;
  j["kernel_applications"] = trace.kernel_applications;
  j["wall_ms"] = trace.wall_ms;
  j["warnings"] = trace.warnings;
  j["diverging"] = trace.diverging;
  std::vector<double> errors;
  for (int n = 1; n <= trace.order; ++n) {
    errors.push_back(l2_norm(subtract(trace.iterates[static_cast<std::size_t>(n)].values, proj.values)));
  }
  j["error_vs_eta_proj"] = errors;
  j["diagnostics"] = {{"h", diag.h},
                      {"mu", diag.mu},
                      {"nu", diag.nu},
                      {"pinv_norm", diag.pinv_norm},
                      {"reduced_criterion", diag.reduced_criterion},
                      {"fast_criterion", diag.fast_criterion},
                      {"projection_defect", diag.projection_defect}};

  out << "method " << name << ", rank " << cfg.rank << ", " << trace.order << " orders\n";
  out << "order  |eta - eta_proj|_2  update_sup  residual_2\n";
  for (int n = 1; n <= trace.order; ++n) {
    const auto i = static_cast<std::size_t>(n - 1);
    out << "  " << n << "  " << format_double(errors[i]) << "  " << format_double(trace.update_norms[i])
        << "  " << format_double(trace.residual_norms[i]) << "\n";
  }
  print_diagnostics(diag, out);

  if (cfg.method != Method::fast) {
    icfg.method = Method::fast;
    icfg.compute_residuals = false;
    const auto fast = inversion::run_inversion(*model, pinv, phi, icfg);
    const double diff = max_abs_difference(fast.final_iterate().values, trace.final_iterate().values);
    j["max_abs_difference_vs_fast"] = diff;
    out << "max |eta_" << name << " - eta_fast| at order " << trace.order << ": "
        << format_double(diff) << " (max |eta_proj| = " << format_double(sup_norm(proj.values))
        << ")\n";
  }
  for (const auto& w : trace.warnings) out << "warning: " << w << "\n";

  auto f = open_output(cfg.output_dir / "trace.json");
  f << j.dump(2) << "\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const auto model = radial::assemble_model(cfg.model);
  const BoundaryData phi = generate_phi(cfg);
  const auto pinv = linalg::truncated_pinv(model->k1_matrix(), static_cast<std::size_t>(cfg.rank));

  auto f = open_output(cfg.output_dir / "bench.csv");
  f << "method,order,kernel_applications,wall_ms\n";
  bool law_ok = true;
  double fast_ms = 0.0;
  double ibs_ms = 0.0;
  for (Method m : {Method::fast, Method::hoskins_reduced, Method::reduced_ibs, Method::ibs}) {
    inversion::InversionConfig icfg;
    icfg.method = m;
    icfg.order = cfg.order;
    model->reset_kernel_applications();
    const auto trace = inversion::run_inversion(*model, pinv, phi, icfg);
    const std::string name(inversion::method_name(m));
    std::uint64_t expected = 0;
    for (int n = 1; n <= trace.order; ++n) {
      const auto got = trace.kernel_applications[static_cast<std::size_t>(n - 1)];
      if (n >= 2) expected += (m == Method::ibs) ? (std::uint64_t{1} << (n - 1)) - 1 : 1;
      f << name << ',' << n << ',' << got << ',' << format_double(trace.wall_ms[static_cast<std::size_t>(n - 1)]) << '\n';
      if (got != expected) {
        out << "counter law violated: " << name << " order " << n << " has " << got
            << " kernel applications, expected " << expected << "\n";
        law_ok = false;
      }
    }
    // B is assembled from a single K_2 pass.
    if (m == Method::fast && trace.order >= 2 && model->kernel_applications() != 2) {
      out << "counter law violated: fast assembled B with " << model->kernel_applications()
          << " model kernel applications, expected 2\n";
      law_ok = false;
    }
    out << name << ": " << trace.kernel_applications.back() << " kernel applications, "
        << format_double(trace.wall_ms.back()) << " ms\n";
    if (m == Method::fast) fast_ms = trace.wall_ms.back();
    if (m == Method::ibs) ibs_ms = trace.wall_ms.back();
  }
  if (fast_ms > 0.0) out << "wall-time ratio ibs/fast at order " << cfg.order << ": " << format_double(ibs_ms / fast_ms) << "\n";
  if (!law_ok) return 1;
  out << "counter law holds\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Born series inversion for the diffusion equation"};
  app.require_subcommand(1);

  struct Flag {
    const char* option;
    const char* key;
    const char* help;
  };
  static const Flag model_flags[] = {
      {"--k", "k", "wavenumber"},
      {"--radius-r", "radius_r", "disk radius R"},
      {"--radius-a", "radius_a", "inclusion radius a"},
      {"--eta-a", "eta_a", "inclusion contrast"},
      {"--beta", "beta", "Robin coefficient"},
      {"--modes", "modes", "number of source modes"},
      {"--grid", "grid_n", "radial grid size"},
      {"--rank", "rank", "truncation rank of the pseudoinverse"},
      {"--order", "order", "number of orders"},
      {"--method", "method", "fast|ibs|reduced|hoskins|newton"},
      {"--noise", "noise_sigma", "standard deviation of additive Gaussian noise"},
      {"--seed", "seed", "noise seed"},
      {"--threads", "threads", "worker threads, 0 = hardware concurrency"},
      {"--out", "output_dir", "output directory"},
  };

  struct Bound {
    std::string key;
    std::string value;
    CLI::Option* opt = nullptr;
  };
  struct RadialCommand {
    CLI::App* app = nullptr;
    std::vector<Bound> flags;
    std::string config;
    CLI::Option* config_opt = nullptr;
  };
  auto add_radial = [&](const char* name, const char* help) {
    auto cmd = std::make_unique<RadialCommand>();
    cmd->app = app.add_subcommand(name, help);
    cmd->flags.reserve(std::size(model_flags));
    for (const auto& fl : model_flags) {
      cmd->flags.push_back({fl.key, {}, nullptr});
      cmd->flags.back().opt = cmd->app->add_option(fl.option, cmd->flags.back().value, fl.help);
    }
    cmd->config_opt = cmd->app->add_option("--config", cmd->config, "flat key = value config file");
    return cmd;
  };

  ToyOptions toy;
  std::string matrix_file;
  auto* toy_cmd = app.add_subcommand("toy", "2x2 invertible example with golden values");
  toy_cmd->add_option("--order", toy.order, "number of orders")->capture_default_str();
  auto* matrix_opt = toy_cmd->add_option("--matrix", matrix_file, "square matrix file");
  toy_cmd->add_option("--x", toy.x, "true field, comma separated")->delimiter(',');

  auto forward = add_radial("forward", "write exact boundary data to phi.csv");
  auto invert = add_radial("invert", "reconstruct eta for orders 1..n");
  std::string phi_file;
  auto* phi_opt = invert->app->add_option("--phi", phi_file, "boundary data CSV (m,phi)");
  auto bench = add_radial("bench", "per-order cost of each scheme");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto build_config = [](const RadialCommand& cmd) {
    RunConfig cfg;
    cfg.model.threads = 0;
    if (cmd.config_opt->count() > 0) {
      for (const auto& [k, v] : read_config_file(cmd.config)) set_field(cfg, k, v);
    }
    for (const auto& b : cmd.flags) {
      if (b.opt->count() > 0) set_field(cfg, b.key, b.value);
    }
    cfg.validate();
    return cfg;
  };

  try {
    if (toy_cmd->parsed()) {
      if (matrix_opt->count() > 0) toy.matrix_file = matrix_file;
      return cmd_toy(toy, std::cout);
    }
    if (forward->app->parsed()) return cmd_forward(build_config(*forward), std::cout);
    if (invert->app->parsed()) {
      std::optional<fs::path> phi;
      if (phi_opt->count() > 0) phi = phi_file;
      return cmd_invert(build_config(*invert), phi, std::cout);
    }
    if (bench->app->parsed()) return cmd_bench(build_config(*bench), std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace bornfast::cli
