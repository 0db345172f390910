#include "bornfast/born_inversion.hpp"

#include <chrono>
#include <cmath>
#include <functional>

namespace bornfast::inversion {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::fast: return "fast";
    case Method::ibs: return "ibs";
    case Method::reduced_ibs: return "reduced";
    case Method::hoskins_reduced: return "hoskins";
    case Method::newton: return "newton";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "fast") return Method::fast;
  if (name == "ibs") return Method::ibs;
  if (name == "reduced" || name == "reduced_ibs") return Method::reduced_ibs;
  if (name == "hoskins" || name == "hoskins_reduced") return Method::hoskins_reduced;
  if (name == "newton") return Method::newton;
  throw InversionError("unknown inversion method '" + std::string(name) +
                       "' (expected fast|ibs|reduced|hoskins|newton)");
}

std::uint64_t composition_count(int j, int m) {
  if (m < 1 || j < m) return 0;
  // C(j-1, m-1)
  std::uint64_t c = 1;
  const int n = j - 1;
  const int r = std::min(m - 1, n - (m - 1));
  for (int i = 1; i <= r; ++i) c = c * static_cast<std::uint64_t>(n - r + i) / static_cast<std::uint64_t>(i);
  return c;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_inputs(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                  const BoundaryData& phi) {
  if (pinv.pinv.rows() != model.field_size() || pinv.pinv.cols() != model.data_size()) {
    throw InversionError("regularized inverse is " + std::to_string(pinv.pinv.rows()) + "x" +
                         std::to_string(pinv.pinv.cols()) + ", model expects " +
                         std::to_string(model.field_size()) + "x" +
                         std::to_string(model.data_size()));
  }
  if (phi.size() != model.data_size()) {
    throw InversionError("boundary data has " + std::to_string(phi.size()) +
                         " entries, model has " + std::to_string(model.data_size()) + " modes");
  }
}

void check_order(int order) {
  if (order < 1) throw InversionError("order must be >= 1, got " + std::to_string(order));
}

MaterialField apply_pinv(const linalg::RegularizedInverse& pinv, const BoundaryData& data) {
  return MaterialField(pinv.apply(data.values));
}

// Appends bookkeeping for a newly completed order.
void record_order(IterationTrace& trace, MaterialField next, std::uint64_t kernel_total,
                  Clock::time_point start) {
  const MaterialField& prev = trace.iterates.back();
  trace.update_norms.push_back(max_abs_difference(next.values, prev.values));
  trace.iterates.push_back(std::move(next));
  trace.kernel_applications.push_back(kernel_total);
  trace.wall_ms.push_back(elapsed_ms(start));
  trace.order = static_cast<int>(trace.iterates.size()) - 1;

  const auto& u = trace.update_norms;
  const std::size_t n = u.size();
  if (!trace.diverging && n >= 4 && u[n - 1] > u[n - 2] && u[n - 2] > u[n - 3] &&
      u[n - 3] > u[n - 4]) {
    trace.diverging = true;
    trace.warnings.push_back("update norm grew over 3 consecutive orders (ending at order " +
                             std::to_string(trace.order) + ")");
  }
}

IterationTrace start_trace(Method method, std::size_t field_size) {
  IterationTrace t;
  t.method = method;
  t.iterates.emplace_back(field_size);
  return t;
}

bool reached_tolerance(const IterationTrace& trace, const InversionConfig& config) {
  return config.tolerance > 0.0 && !trace.update_norms.empty() &&
         trace.update_norms.back() <= config.tolerance;
}

void fill_residuals(IterationTrace& trace, const ForwardModel& model, const BoundaryData& phi) {
  trace.residual_norms.clear();
  for (std::size_t n = 1; n < trace.iterates.size(); ++n) {
    const BoundaryData k = model.forward_map(trace.iterates[n]);
    trace.residual_norms.push_back(l2_norm(subtract(k.values, phi.values)));
  }
}

// Calls visit(parts) for every composition of j into m positive parts, in
// lexicographic order of the part sequence.
void for_each_composition(int j, int m, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> parts;
  parts.reserve(static_cast<std::size_t>(m));
  std::function<void(int, int)> rec = [&](int remaining, int slots) {
    if (slots == 1) {
      parts.push_back(remaining);
      visit(parts);
      parts.pop_back();
      return;
    }
    for (int first = 1; first <= remaining - (slots - 1); ++first) {
      parts.push_back(first);
      rec(remaining - first, slots - 1);
      parts.pop_back();
    }
  };
  rec(j, m);
}

MaterialField ibs_operator_impl(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                                std::span<const BoundaryData> data, IbsCounters* counters,
                                bool top_level) {
  const std::size_t j = data.size();
  if (j == 1) return apply_pinv(pinv, data[0]);

  std::vector<MaterialField> psi;
  psi.reserve(j);
  for (const auto& d : data) psi.push_back(apply_pinv(pinv, d));

  MaterialField result(model.field_size());
  const int order = static_cast<int>(j);
  for (int m = 1; m <= order - 1; ++m) {
    for_each_composition(order, m, [&](const std::vector<int>& parts) {
      if (counters && top_level) ++counters->compositions_per_order[j - 1];
      std::vector<BoundaryData> inner;
      inner.reserve(parts.size());
      std::size_t offset = 0;
      for (int part : parts) {
        const auto len = static_cast<std::size_t>(part);
        inner.push_back(model.apply_kj(std::span<const MaterialField>(psi).subspan(offset, len)));
        if (counters) ++counters->forward_operator_applications;
        offset += len;
      }
      const MaterialField sub = ibs_operator_impl(model, pinv, inner, counters, false);
      axpy(-1.0, sub.values, result.values);
    });
  }
  return result;
}

MaterialField ibs_term(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                       const BoundaryData& phi, int j, IbsCounters* counters) {
  const std::vector<BoundaryData> data(static_cast<std::size_t>(j), phi);
  return ibs_operator_impl(model, pinv, data, counters, true);
}

// Unrolling R~_j(phi, ..., phi) gives (-1)^(j-1) a_j with a_1 = R phi and
// a_l = R K_2(a_{l-1} x P^(l-2) R phi), P = R K_1.  a_l does not depend on j,
// so each order costs one K_2 and one K_1 application.
struct ReducedState {
  MaterialField chain;
  MaterialField projected;
  double sign = 1.0;
};

MaterialField reduced_next(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                           ReducedState& state, ReducedCounters* counters) {
  const std::vector<MaterialField> args{state.chain, state.projected};
  state.chain = apply_pinv(pinv, model.apply_kj(args));
  if (counters) ++counters->k2_applications;
  state.projected = apply_pinv(pinv, model.apply_kj(std::span<const MaterialField>(&state.projected, 1)));
  if (counters) ++counters->k1_applications;
  state.sign = -state.sign;
  MaterialField out = state.chain;
  for (double& v : out.values) v *= state.sign;
  return out;
}

MaterialField hoskins_next(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                           const MaterialField& previous, const MaterialField& eta1,
                           ReducedCounters* counters) {
  const std::vector<MaterialField> args{previous, eta1};
  const BoundaryData k2 = model.apply_kj(args);
  if (counters) ++counters->k2_applications;
  MaterialField out = apply_pinv(pinv, k2);
  for (double& v : out.values) v = -v;
  return out;
}

}  // namespace

MaterialField eta_projection(const linalg::RegularizedInverse& pinv, const ForwardModel& model,
                             const MaterialField& eta_true) {
  if (eta_true.size() != model.field_size()) {
    throw InversionError("eta_projection: field size does not match model");
  }
  const std::vector<double> data = linalg::multiply(model.k1_matrix(), eta_true.values);
  if (pinv.pinv.cols() != data.size()) throw InversionError("eta_projection: shape mismatch");
  return MaterialField(pinv.apply(data));
}

linalg::DenseMatrix fast_update_matrix(const ForwardModel& model,
                                       const linalg::RegularizedInverse& pinv,
                                       const MaterialField& eta1) {
  const linalg::DenseMatrix k2 = model.k2_first_slot_matrix(eta1);
  return -1.0 * (pinv.pinv * k2);
}

IterationTrace fast_iterate(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                            const BoundaryData& phi, int order, const InversionConfig& config) {
  check_inputs(model, pinv, phi);
  check_order(order);
  const auto start = Clock::now();
  IterationTrace trace = start_trace(Method::fast, model.field_size());
  record_order(trace, apply_pinv(pinv, phi), 0, start);

  // eta^(n) - eta^(n-1) is carried as the last step rather than recomputed by
  // subtraction; the two agree up to rounding.
  linalg::DenseMatrix update;
  std::vector<double> step = trace.iterates[1].values;
  std::uint64_t applications = 0;
  while (trace.order < order && !reached_tolerance(trace, config)) {
    if (update.empty()) update = fast_update_matrix(model, pinv, trace.iterates[1]);
    step = linalg::multiply(update, step);
    ++applications;
    record_order(trace, MaterialField(add(trace.iterates.back().values, step)), applications,
                 start);
  }
  if (config.compute_residuals) fill_residuals(trace, model, phi);
  return trace;
}

IterationTrace newton_iterate(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                              const BoundaryData& phi, int order, const InversionConfig& config) {
  check_inputs(model, pinv, phi);
  check_order(order);
  const auto start = Clock::now();
  IterationTrace trace = start_trace(Method::newton, model.field_size());
  record_order(trace, apply_pinv(pinv, phi), 0, start);

  auto forward = [&](const MaterialField& eta) {
    if (!config.newton_forward.series_terms) return model.forward_map(eta);
    const int terms = *config.newton_forward.series_terms;
    BoundaryData sum(model.data_size());
    std::vector<MaterialField> args;
    for (int j = 1; j <= terms; ++j) {
      args.push_back(eta);
      axpy(1.0, model.apply_kj(args).values, sum.values);
    }
    return sum;
  };

  std::uint64_t evaluations = 0;
  while (trace.order < order && !reached_tolerance(trace, config)) {
    const MaterialField& cur = trace.iterates.back();
    BoundaryData k_eta;
    try {
      k_eta = forward(cur);
    } catch (const std::exception& e) {
      throw ForwardSolveError("newton: forward evaluation failed at iterate " +
                                  std::to_string(trace.order) + ": " + e.what(),
                              trace.order);
    }
    ++evaluations;
    const std::vector<double> correction = pinv.apply(subtract(k_eta.values, phi.values));
    record_order(trace, MaterialField(subtract(cur.values, correction)), evaluations, start);
  }
  if (config.compute_residuals) fill_residuals(trace, model, phi);
  return trace;
}

MaterialField ibs_operator(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                           std::span<const BoundaryData> data, IbsCounters* counters) {
  if (data.empty()) throw InversionError("ibs_operator: at least one argument required");
  if (counters && counters->compositions_per_order.size() < data.size()) {
    counters->compositions_per_order.resize(data.size(), 0);
  }
  return ibs_operator_impl(model, pinv, data, counters, true);
}

std::vector<MaterialField> ibs_terms(const ForwardModel& model,
                                     const linalg::RegularizedInverse& pinv,
                                     const BoundaryData& phi, int max_order,
                                     IbsCounters* counters, const IbsOptions& opts) {
  check_inputs(model, pinv, phi);
  check_order(max_order);
  if (max_order > opts.order_guard) {
    throw InversionError("inverse Born series order " + std::to_string(max_order) +
                         " exceeds the cost guard of " + std::to_string(opts.order_guard));
  }
  if (counters) counters->compositions_per_order.assign(static_cast<std::size_t>(max_order), 0);
  std::vector<MaterialField> terms;
  for (int j = 1; j <= max_order; ++j) terms.push_back(ibs_term(model, pinv, phi, j, counters));
  return terms;
}

std::vector<MaterialField> reduced_ibs_terms(const ForwardModel& model,
                                             const linalg::RegularizedInverse& pinv,
                                             const BoundaryData& phi, int max_order,
                                             ReducedVariant variant, ReducedCounters* counters) {
  check_inputs(model, pinv, phi);
  check_order(max_order);
  std::vector<MaterialField> terms;
  terms.push_back(apply_pinv(pinv, phi));
  ReducedState state{terms.front(), terms.front(), 1.0};
  for (int j = 2; j <= max_order; ++j) {
    if (variant == ReducedVariant::hoskins) {
      terms.push_back(hoskins_next(model, pinv, terms.back(), terms.front(), counters));
    } else {
      terms.push_back(reduced_next(model, pinv, state, counters));
    }
  }
  return terms;
}

IterationTrace run_inversion(const ForwardModel& model, const linalg::RegularizedInverse& pinv,
                             const BoundaryData& phi, const InversionConfig& config) {
  check_inputs(model, pinv, phi);
  check_order(config.order);
  switch (config.method) {
    case Method::fast: return fast_iterate(model, pinv, phi, config.order, config);
    case Method::newton: return newton_iterate(model, pinv, phi, config.order, config);
    default: break;
  }

  if (config.method == Method::ibs && config.order > config.ibs_order_guard) {
    throw InversionError("inverse Born series order " + std::to_string(config.order) +
                         " exceeds the cost guard of " + std::to_string(config.ibs_order_guard));
  }

  const auto start = Clock::now();
  IterationTrace trace = start_trace(config.method, model.field_size());
  const MaterialField eta1 = apply_pinv(pinv, phi);
  record_order(trace, eta1, 0, start);

  IbsCounters ibs_counters;
  ibs_counters.compositions_per_order.assign(static_cast<std::size_t>(config.order), 0);
  ReducedCounters reduced_counters;
  ReducedState reduced_state{eta1, eta1, 1.0};
  MaterialField last_term = eta1;
  std::uint64_t cumulative = 0;

  for (int j = 2; j <= config.order && !reached_tolerance(trace, config); ++j) {
    MaterialField term;
    switch (config.method) {
      case Method::ibs:
        term = ibs_term(model, pinv, phi, j, &ibs_counters);
        cumulative += ibs_counters.compositions_per_order[static_cast<std::size_t>(j - 1)];
        break;
      case Method::reduced_ibs:
        term = reduced_next(model, pinv, reduced_state, &reduced_counters);
        cumulative = reduced_counters.k2_applications;
        break;
      case Method::hoskins_reduced:
        term = hoskins_next(model, pinv, last_term, eta1, &reduced_counters);
        cumulative = reduced_counters.k2_applications;
        break;
      default: break;
    }
    MaterialField partial(add(trace.iterates.back().values, term.values));
    last_term = std::move(term);
    record_order(trace, std::move(partial), cumulative, start);
  }
  if (config.compute_residuals) fill_residuals(trace, model, phi);
  return trace;
}

ConvergenceDiagnostics diagnostics(const ForwardModel& model,
                                   const linalg::RegularizedInverse& pinv,
                                   const BoundaryData& phi) {
  check_inputs(model, pinv, phi);
  ConvergenceDiagnostics d;
  const MaterialField eta1 = apply_pinv(pinv, phi);
  d.h = sup_norm(eta1.values);
  const GreenNorms g = model.green_norms();
  d.mu = g.mu;
  d.nu = g.nu;
  d.pinv_norm = linalg::spectral_norm_estimate(pinv.pinv);
  d.reduced_criterion = d.nu > 0.0 ? d.mu * l2_norm(phi.values) / d.nu : 0.0;
  d.fast_criterion = linalg::spectral_norm_estimate(fast_update_matrix(model, pinv, eta1));
  // R K_1 - I restricted to the retained subspace, i.e. to the range of P = R K_1.
  const linalg::DenseMatrix p = pinv.pinv * model.k1_matrix();
  d.projection_defect = linalg::spectral_norm_estimate(
      (p - linalg::DenseMatrix::identity(model.field_size())) * p);
  return d;
}

}  // namespace bornfast::inversion
