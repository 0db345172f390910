#include <doctest.h>

#include <cmath>
#include <random>

#include "bornfast/born_inversion.hpp"
#include "bornfast/finite_model.hpp"
#include "bornfast/radial_model.hpp"
#include "oracles.hpp"

using namespace bornfast;
using namespace bornfast::inversion;

namespace {

const std::vector<std::pair<double, double>> kGolden{{0.0684578, 0.0759273},
                                                     {0.0699660, 0.0797927},
                                                     {0.0699993, 0.0799895},
                                                     {0.0700000, 0.0799995},
                                                     {0.0700000, 0.0800000}};

struct Toy {
  FiniteBornModel model = FiniteBornModel::reference_example();
  linalg::RegularizedInverse pinv = linalg::truncated_pinv(model.k1_matrix(), 2);
  BoundaryData phi = model.forward_map(FiniteBornModel::reference_truth());
};

IterationTrace run(const ForwardModel& m, const linalg::RegularizedInverse& p, const BoundaryData& phi,
                   Method method, int order) {
  InversionConfig c;
  c.method = method;
  c.order = order;
  return run_inversion(m, p, phi, c);
}

struct Coarse {
  radial::ModelParams params;
  std::unique_ptr<radial::RadialForwardModel> model;
  linalg::RegularizedInverse pinv;
  BoundaryData phi;
  Coarse(int n, int modes, std::size_t rank) {
    params.grid_n = n;
    params.modes = modes;
    model = radial::assemble_model(params);
    pinv = linalg::truncated_pinv(model->k1_matrix(), rank);
    phi = radial::forward_exact(params);
  }
};

}  // namespace

TEST_CASE("method names round-trip") {
  for (Method m : {Method::fast, Method::ibs, Method::reduced_ibs, Method::hoskins_reduced, Method::newton}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("gauss"), InversionError);
}

TEST_CASE("composition counts") {
  CHECK(composition_count(4, 1) == 1);
  CHECK(composition_count(4, 2) == 3);
  CHECK(composition_count(4, 3) == 3);
  CHECK(composition_count(4, 4) == 1);
  for (int j = 2; j <= 10; ++j) {
    std::uint64_t total = 0;
    for (int m = 1; m < j; ++m) total += composition_count(j, m);
    CHECK(total == (std::uint64_t{1} << (j - 1)) - 1);
  }
}

TEST_CASE("2x2 goldens: fast, IBS, reduced, Hoskins") {
  Toy t;
  for (Method m : {Method::fast, Method::ibs, Method::reduced_ibs, Method::hoskins_reduced}) {
    const auto tr = run(t.model, t.pinv, t.phi, m, 5);
    REQUIRE(tr.iterates.size() == 6);
    for (std::size_t n = 1; n <= 5; ++n) {
      INFO(method_name(m) << " order " << n);
      CHECK(std::abs(tr.iterates[n].values[0] - kGolden[n - 1].first) <= 1e-6);
      CHECK(std::abs(tr.iterates[n].values[1] - kGolden[n - 1].second) <= 1e-6);
    }
  }
}

TEST_CASE("order 1 is R phi bit for bit for every method") {
  Toy t;
  const auto direct = t.pinv.apply(t.phi.values);
  for (Method m : {Method::fast, Method::ibs, Method::reduced_ibs, Method::hoskins_reduced, Method::newton}) {
    CHECK(run(t.model, t.pinv, t.phi, m, 1).iterates[1].values == direct);
  }
  Coarse c(12, 10, 5);
  const auto d2 = c.pinv.apply(c.phi.values);
  for (Method m : {Method::fast, Method::ibs, Method::reduced_ibs, Method::hoskins_reduced, Method::newton}) {
    CHECK(run(*c.model, c.pinv, c.phi, m, 1).iterates[1].values == d2);
  }
  CHECK(ibs_terms(*c.model, c.pinv, c.phi, 1)[0].values == d2);
}

TEST_CASE("zero data stays at zero") {
  Toy t;
  const BoundaryData zero(2);
  for (Method m : {Method::fast, Method::ibs, Method::reduced_ibs, Method::hoskins_reduced, Method::newton}) {
    for (const auto& it : run(t.model, t.pinv, zero, m, 4).iterates) CHECK(sup_norm(it.values) == 0.0);
  }
}

TEST_CASE("invertible case: every scheme produces the same terms") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
    linalg::DenseMatrix a = oracle::random_matrix(n, n, rng, -0.3, 0.3);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 0.5;
    const FiniteBornModel model(a);
    MaterialField x(n);
    for (double& v : x.values) v = 0.1 * d(rng);
    const auto pinv = linalg::truncated_pinv(a, n);
    const auto phi = model.forward_map(x);
    const auto ibs = ibs_terms(model, pinv, phi, 5);
    const auto red = reduced_ibs_terms(model, pinv, phi, 5, ReducedVariant::dominant_composition);
    const auto hos = reduced_ibs_terms(model, pinv, phi, 5, ReducedVariant::hoskins);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(max_abs_difference(ibs[j].values, red[j].values) <= 1e-12);
      CHECK(max_abs_difference(ibs[j].values, hos[j].values) <= 1e-12);
    }
  }
}

TEST_CASE("eta_1 and eta_2 of the two reduced variants coincide with the IBS") {
  Coarse c(10, 10, 6);
  const auto ibs = ibs_terms(*c.model, c.pinv, c.phi, 2);
  const auto hos = reduced_ibs_terms(*c.model, c.pinv, c.phi, 2, ReducedVariant::hoskins);
  CHECK(hos[0].values == ibs[0].values);
  CHECK(max_abs_difference(hos[1].values, ibs[1].values) <= 1e-12 * sup_norm(ibs[1].values));
  // eta_2 = -R K_2(R phi, R phi)
  const MaterialField e1 = ibs[0];
  const auto k2 = c.model->apply_kj(std::vector<MaterialField>{e1, e1});
  const auto closed = scaled(c.pinv.apply(k2.values), -1.0);
  CHECK(max_abs_difference(closed, ibs[1].values) <= 1e-12 * sup_norm(closed));
}

TEST_CASE("incremental reduced series equals the defining recursion") {
  Coarse c(10, 10, 6);
  const auto red = reduced_ibs_terms(*c.model, c.pinv, c.phi, 5, ReducedVariant::dominant_composition);
  for (std::size_t j = 1; j <= 5; ++j) {
    const auto ref = oracle::reduced_recursive(*c.model, c.pinv.pinv, std::vector<BoundaryData>(j, c.phi));
    CHECK(max_abs_difference(red[j - 1].values, ref.values) <= 1e-11 * sup_norm(ref.values));
  }
}

TEST_CASE("IBS j=4 against the bitmask composition oracle") {
  Coarse c(8, 8, 4);
  const auto terms = ibs_terms(*c.model, c.pinv, c.phi, 4);
  const auto ref = oracle::ibs_bitmask(*c.model, c.pinv.pinv, std::vector<BoundaryData>(4, c.phi));
  CHECK(max_abs_difference(terms[3].values, ref.values) <= 1e-11 * sup_norm(ref.values));
  // distinct arguments
  std::vector<BoundaryData> mixed{c.phi, BoundaryData(scaled(c.phi.values, -0.5)), c.phi,
                                  BoundaryData(scaled(c.phi.values, 2.0))};
  const auto got = ibs_operator(*c.model, c.pinv, mixed);
  const auto want = oracle::ibs_bitmask(*c.model, c.pinv.pinv, mixed);
  CHECK(max_abs_difference(got.values, want.values) <= 1e-11 * sup_norm(want.values));
}

TEST_CASE("IBS counters and order guard") {
  Toy t;
  IbsCounters counters;
  (void)ibs_terms(t.model, t.pinv, t.phi, 6, &counters);
  REQUIRE(counters.compositions_per_order.size() == 6);
  for (int j = 1; j <= 6; ++j) {
    CHECK(counters.compositions_per_order[static_cast<std::size_t>(j - 1)] == (std::uint64_t{1} << (j - 1)) - 1);
  }
  CHECK(counters.forward_operator_applications > 57);
  CHECK_THROWS_AS(ibs_terms(t.model, t.pinv, t.phi, 9), InversionError);
  IbsOptions relaxed;
  relaxed.order_guard = 9;
  CHECK_NOTHROW(ibs_terms(t.model, t.pinv, t.phi, 9, nullptr, relaxed));
  InversionConfig cfg;
  cfg.method = Method::ibs;
  cfg.order = 9;
  CHECK_THROWS_AS(run_inversion(t.model, t.pinv, t.phi, cfg), InversionError);
}

TEST_CASE("fast scheme: counter law and single B assembly") {
  Coarse c(20, 20, 8);
  c.model->reset_kernel_applications();
  const auto tr = run(*c.model, c.pinv, c.phi, Method::fast, 5);
  CHECK(tr.kernel_applications == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(c.model->kernel_applications() == 2);
  CHECK(tr.wall_ms.size() == 5);
  CHECK(tr.update_norms.size() == 5);
  for (std::size_t i = 1; i < tr.wall_ms.size(); ++i) CHECK(tr.wall_ms[i] >= tr.wall_ms[i - 1]);
}

TEST_CASE("fast update: B matrix vs direct K_2, and linearity") {
  Coarse c(12, 12, 6);
  const MaterialField eta1(c.pinv.apply(c.phi.values));
  const auto b = fast_update_matrix(*c.model, c.pinv, eta1);
  MaterialField delta(12);
  for (std::size_t i = 0; i < 12; ++i) delta.values[i] = std::sin(1.3 * static_cast<double>(i) + 0.2);
  const auto via_b = oracle::matvec(b, delta.values);
  const auto k2 = c.model->apply_kj(std::vector<MaterialField>{delta, eta1});
  const auto direct = scaled(c.pinv.apply(k2.values), -1.0);
  CHECK(max_abs_difference(via_b, direct) <= 1e-11 * std::max(1.0, sup_norm(direct)));
  const double s = -3.7;
  const auto scaled_b = oracle::matvec(b, scaled(delta.values, s));
  CHECK(max_abs_difference(scaled_b, scaled(via_b, s)) <= 1e-12 * sup_norm(scaled_b));
}

TEST_CASE("Hoskins partial sums track the fast iterates") {
  Toy t;
  const auto fast = run(t.model, t.pinv, t.phi, Method::fast, 8);
  const auto hos = run(t.model, t.pinv, t.phi, Method::hoskins_reduced, 8);
  for (std::size_t n = 0; n < fast.iterates.size(); ++n) {
    CHECK(max_abs_difference(fast.iterates[n].values, hos.iterates[n].values) <= 1e-13);
  }
  // rank 10 keeps ||R|| moderate; see the notes on rank 23
  Coarse c(90, 90, 10);
  const auto f2 = run(*c.model, c.pinv, c.phi, Method::fast, 5);
  const auto h2 = run(*c.model, c.pinv, c.phi, Method::hoskins_reduced, 5);
  for (std::size_t n = 0; n < f2.iterates.size(); ++n) {
    CHECK(max_abs_difference(f2.iterates[n].values, h2.iterates[n].values) <= 1e-13);
  }
}

TEST_CASE("Newton with a truncated series converges on the 2x2 example") {
  Toy t;
  InversionConfig cfg;
  cfg.method = Method::newton;
  cfg.order = 30;
  cfg.newton_forward.series_terms = 5;
  const auto tr = run_inversion(t.model, t.pinv, t.phi, cfg);
  CHECK(tr.update_norms.back() < 1e-9);
  const auto& x = tr.final_iterate();
  const auto res = t.pinv.apply(subtract(t.model.forward_map(x).values, t.phi.values));
  CHECK(sup_norm(res) <= 1e-9);
  CHECK(x.values[0] == doctest::Approx(0.07).epsilon(1e-6));
}

TEST_CASE("Newton contracts on the radial problem") {
  radial::ModelParams p;
  p.threads = 0;
  const auto model = radial::assemble_model(p);
  const auto pinv = linalg::truncated_pinv(model->k1_matrix(), 23);
  const auto phi = radial::forward_exact(p);
  InversionConfig cfg;
  cfg.method = Method::newton;
  cfg.order = 8;
  const auto tr = run_inversion(*model, pinv, phi, cfg);
  double q = 0.0;
  for (std::size_t i = 3; i < tr.update_norms.size(); ++i) q = std::max(q, tr.update_norms[i] / tr.update_norms[i - 1]);
  MESSAGE("measured Newton contraction after burn-in: " << q);
  CHECK(q < 1.0);
  CHECK_FALSE(tr.diverging);
}

TEST_CASE("forward-solve failures carry the iterate index") {
  struct Failing final : ForwardModel {
    linalg::DenseMatrix a = linalg::DenseMatrix::identity(2);
    std::size_t field_size() const override { return 2; }
    std::size_t data_size() const override { return 2; }
    const linalg::DenseMatrix& k1_matrix() const override { return a; }
    BoundaryData forward_map(const MaterialField& eta) const override {
      if (sup_norm(eta.values) > 0.5) throw ModelError("singular");
      return BoundaryData(eta.values);
    }
    GreenNorms green_norms() const override { return {}; }
    BoundaryData do_apply_kj(std::span<const MaterialField> f) const override { return BoundaryData(f[0].values); }
  } model;
  const auto pinv = linalg::truncated_pinv(model.a, 2);
  InversionConfig cfg;
  cfg.method = Method::newton;
  cfg.order = 3;
  try {
    (void)run_inversion(model, pinv, BoundaryData(std::vector<double>{1.0, 0.0}), cfg);
    FAIL("expected ForwardSolveError");
  } catch (const ForwardSolveError& e) {
    CHECK(e.iterate() == 1);
  }
}

TEST_CASE("divergence is flagged, not thrown") {
  const FiniteBornModel model(linalg::DenseMatrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}));
  const auto pinv = linalg::truncated_pinv(model.k1_matrix(), 2);
  const BoundaryData phi(std::vector<double>{-2.0, 0.5});
  const auto tr = run(model, pinv, phi, Method::fast, 8);
  CHECK(tr.diverging);
  CHECK_FALSE(tr.warnings.empty());
}

TEST_CASE("tolerance stops early") {
  Toy t;
  InversionConfig cfg;
  cfg.order = 50;
  cfg.tolerance = 1e-8;
  const auto tr = run_inversion(t.model, t.pinv, t.phi, cfg);
  CHECK(tr.order < 50);
  CHECK(tr.update_norms.back() <= 1e-8);
  CHECK(tr.iterates.size() == static_cast<std::size_t>(tr.order) + 1);
}

TEST_CASE("residuals on request") {
  Toy t;
  InversionConfig cfg;
  cfg.compute_residuals = true;
  const auto tr = run_inversion(t.model, t.pinv, t.phi, cfg);
  REQUIRE(tr.residual_norms.size() == 5);
  CHECK(tr.residual_norms.back() < tr.residual_norms.front());
}

TEST_CASE("argument validation") {
  Toy t;
  CHECK_THROWS_AS(run(t.model, t.pinv, t.phi, Method::fast, 0), InversionError);
  CHECK_THROWS_AS(run(t.model, t.pinv, BoundaryData(3), Method::fast, 2), InversionError);
}

TEST_CASE("eta_projection") {
  Toy t;
  const auto x = FiniteBornModel::reference_truth();
  const auto proj = eta_projection(t.pinv, t.model, x);
  CHECK(max_abs_difference(proj.values, x.values) <= 1e-9);

  std::mt19937_64 rng(31);
  const auto a = oracle::random_matrix(5, 5, rng);
  const FiniteBornModel model(a);
  const auto f = linalg::svd(a);
  const auto p1 = linalg::truncated_pinv(f, 1);
  const auto out = eta_projection(p1, model, MaterialField(std::vector<double>{1, 2, 3, 4, 5}));
  // parallel to the top right singular vector
  double dot = 0.0;
  for (std::size_t i = 0; i < 5; ++i) dot += out.values[i] * f.v(i, 0);
  CHECK(std::abs(std::abs(dot) - l2_norm(out.values)) <= 1e-12 * l2_norm(out.values));
}

TEST_CASE("diagnostics") {
  Toy t;
  const auto d0 = diagnostics(t.model, t.pinv, BoundaryData(2));
  CHECK(d0.h == 0.0);
  const auto d1 = diagnostics(t.model, t.pinv, t.phi);
  const auto d2 = diagnostics(t.model, t.pinv, BoundaryData(scaled(t.phi.values, 2.0)));
  CHECK(d2.h == 2.0 * d1.h);
  CHECK(d1.projection_defect <= 1e-12);
  for (double v : {d1.h, d1.mu, d1.nu, d1.pinv_norm, d1.reduced_criterion, d1.fast_criterion}) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
  }

  radial::ModelParams p;
  p.threads = 0;
  const auto model = radial::assemble_model(p);
  const auto pinv = linalg::truncated_pinv(model->k1_matrix(), 23);
  const auto d = diagnostics(*model, pinv, radial::forward_exact(p));
  for (double v : {d.h, d.mu, d.nu, d.pinv_norm, d.reduced_criterion, d.fast_criterion, d.projection_defect}) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
  }
  MESSAGE("radial diagnostics: h=" << d.h << " mu=" << d.mu << " nu=" << d.nu << " |R|=" << d.pinv_norm
                                   << " reduced=" << d.reduced_criterion << " fast=" << d.fast_criterion
                                   << " defect=" << d.projection_defect);
}
