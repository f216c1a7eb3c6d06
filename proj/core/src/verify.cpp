#include "sid/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sid/datasets.hpp"
#include "sid/losses.hpp"
#include "sid/metrics.hpp"
#include "sid/oracle.hpp"

namespace sid::eval {

namespace {

constexpr double kToyTolerance = 1e-10;

struct MaxError {
  double error = 0.0;
  double measured = 0.0;
  double expected = 0.0;

  void add(double got, double want) {
    const double e = std::fabs(got - want) / std::max(1.0, std::fabs(want));
    if (e >= error) {
      error = e;
      measured = got;
      expected = want;
    }
  }
  CheckRow row(std::string name) const {
    return {"toy", std::move(name), measured, expected, error, kToyTolerance, error <= kToyTolerance};
  }
};

// Noise levels where the sigma^-2 weighted forms are well conditioned in
// double precision. Below it the rounding error grows like eps / sigma^3.
constexpr double kWellConditionedSigma = 0.05;

struct ToyErrors {
  MaxError delta, delta_exact, l_theta, l1, l2, grad;
};

void toy_case(ToyErrors& e, const oracle::ToyState& s, double z, double eps) {
  const oracle::GaussianDenoiser phi(oracle::GaussianWorld::centered(1));
  const loss::GeneratorDraws draws{Tensor::scalar(z), Tensor::scalar(eps), {s.sigma}};
  const oracle::ShiftGenerator generator({s.theta});
  const oracle::ToyFakeDenoiser psi({s.psi});
  const oracle::ToyFakeDenoiser psi_exact({s.theta});

  const Tensor x_t = Tensor::scalar(s.theta + z + s.sigma * eps);
  e.delta.add(loss::delta_hat(phi, psi, x_t, draws.sigma).item(), oracle::toy_delta(s));
  e.delta_exact.add(loss::delta_hat(phi, psi_exact, x_t, draws.sigma).item(), oracle::toy_delta_exact(s));
  e.l_theta.add(loss::l1_hat_loss(phi, psi_exact, generator, draws).report.value,
                oracle::toy_losses(s).l_theta);
  e.l1.add(loss::l1_hat_loss(phi, psi, generator, draws).report.value, oracle::toy_losses(s).l1_hat);
  const loss::LossResult r2 = loss::l2_hat_loss(phi, psi, generator, draws);
  e.l2.add(r2.report.value, oracle::toy_l2_value(s, s.theta + z, eps));
  e.grad.add(r2.gradient.at(0), oracle::toy_l2_gradient(s, z, 1.0));
}

oracle::ToyState draw_toy_state(Rng& rng, double sigma_lo, double sigma_hi) {
  oracle::ToyState s;
  s.theta = rng.uniform(-3.0, 3.0);
  s.psi = rng.uniform(-3.0, 3.0);
  s.sigma = std::exp(rng.uniform(std::log(sigma_lo), std::log(sigma_hi)));
  return s;
}

std::vector<CheckRow> toy_suite(const VerifyOptions& o) {
  Rng rng(o.seed, 101);
  const diffusion::NoiseSchedule schedule;
  ToyErrors e;
  for (std::size_t k = 0; k < o.toy_cases; ++k) {
    const auto s = draw_toy_state(rng, kWellConditionedSigma, schedule.sigma_max);
    const double z = rng.normal(), eps = rng.normal();
    toy_case(e, s, z, eps);
  }
  std::vector<CheckRow> rows = {e.delta.row("delta_phi_psi = -psi/(1+s^2)"),
                                e.delta_exact.row("delta_phi_psi*(theta) = -theta/(1+s^2)"),
                                e.l_theta.row("L_theta = theta^2/(1+s^2)^2"),
                                e.l1.row("L1_hat = psi^2/(1+s^2)^2"),
                                e.l2.row("L2_hat = psi/(1+s^2)^2 (x_g - eps/s)"),
                                e.grad.row("dL2_hat/dtheta = psi/(1+s^2)^2")};

  // Small noise levels: same identities, tolerance scaled by the conditioning.
  double worst = 0.0;
  for (std::size_t k = 0; k < o.toy_cases; ++k) {
    const auto s = draw_toy_state(rng, schedule.sigma_min, kWellConditionedSigma);
    const double z = rng.normal(), eps = rng.normal();
    ToyErrors small;
    toy_case(small, s, z, eps);
    const double scale = std::pow(kWellConditionedSigma / s.sigma, 3);
    for (const MaxError* m : {&small.delta, &small.delta_exact, &small.l_theta, &small.l1, &small.l2, &small.grad}) {
      worst = std::max(worst, m->error / scale);
    }
  }
  rows.push_back({"toy", "all of the above, s in [0.002, 0.05]", worst, 0.0, worst, kToyTolerance,
                  worst <= kToyTolerance});
  return rows;
}

CheckRow identity_row(std::string name, const IdentityReport& r, std::size_t component = 0) {
  return {"identities", std::move(name), r.lhs.mean.at(component), r.rhs.mean.at(component),
          r.z_score, 3.0, r.pass};
}

std::vector<CheckRow> identity_suite(const VerifyOptions& o) {
  std::vector<CheckRow> rows;
  const std::size_t n = o.mc_samples;

  // Real-data Tweedie on N(0, 1) at sigma = 1, probe x_t = 1 plus random probes.
  {
    Rng rng(o.seed, 201);
    const oracle::GaussianWorld world = oracle::GaussianWorld::centered(1);
    const PointSampler clean = [](Rng& r) { return std::vector<double>{r.normal()}; };
    const ScoreFn score = [&](std::span<const double> x, double sigma) {
      return oracle::analytic_score(world, Tensor::row(x), sigma).to_vector();
    };
    auto probes = draw_probes(clean, 1.0, 15, rng);
    probes.insert(probes.begin(), std::vector<double>{1.0});
    const TweedieReport t = check_tweedie(clean, score, 1.0, probes, n, rng);
    rows.push_back(identity_row("tweedie real N(0,1), s=1, x_t=1", t.probes.front().report));
    double worst = 0.0;
    for (const auto& p : t.probes) worst = std::max(worst, p.report.z_score);
    rows.push_back({"identities", "tweedie real N(0,1), s=1, 16 probes", worst, 0.0, worst, 3.0, t.pass});
  }
  // Fake-data Tweedie with generator N(2, 1).
  {
    Rng rng(o.seed, 202);
    const oracle::GaussianWorld world{1, {2.0}};
    const PointSampler clean = [](Rng& r) { return std::vector<double>{2.0 + r.normal()}; };
    const ScoreFn score = [&](std::span<const double> x, double sigma) {
      return oracle::analytic_score(world, Tensor::row(x), sigma).to_vector();
    };
    auto probes = draw_probes(clean, 1.0, 15, rng);
    probes.insert(probes.begin(), std::vector<double>{2.0});
    const TweedieReport t = check_tweedie(clean, score, 1.0, probes, n, rng);
    rows.push_back(identity_row("tweedie fake N(2,1), s=1, x_t=2", t.probes.front().report));
    double worst = 0.0;
    for (const auto& p : t.probes) worst = std::max(worst, p.report.z_score);
    rows.push_back({"identities", "tweedie fake N(2,1), s=1, 16 probes", worst, 0.0, worst, 3.0, t.pass});
  }
  // Tweedie on the ring mixture, exact diffused score.
  {
    Rng rng(o.seed, 203);
    const data::GaussianMixture ring = data::ring8();
    const PointSampler clean = [&](Rng& r) { return ring.sample_point(r); };
    const ScoreFn score = [&](std::span<const double> x, double sigma) {
      return ring.diffused_score(x, sigma);
    };
    const auto probes = draw_probes(clean, 0.5, 16, rng);
    const TweedieReport t = check_tweedie(clean, score, 0.5, probes, n, rng);
    double worst = 0.0;
    for (const auto& p : t.probes) worst = std::max(worst, p.report.z_score);
    rows.push_back({"identities", "tweedie ring8, s=0.5, 16 probes", worst, 0.0, worst, 3.0, t.pass});
  }
  // Stein form of the projection identity: u(x) = x in 2D gives -d.
  {
    Rng rng(o.seed, 204);
    const oracle::GaussianWorld world{2, {0.5, -1.0}};
    const PointSampler clean = [&](Rng& r) {
      return std::vector<double>{world.mean[0] + r.normal(), world.mean[1] + r.normal()};
    };
    const ProjectionFn u = [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };
    const ScoreFn score = [&](std::span<const double> x, double sigma) {
      return oracle::analytic_score(world, Tensor::row(x), sigma).to_vector();
    };
    const IdentityReport r = check_projection_identity(clean, u, score, 1.5, n, rng);
    CheckRow row = identity_row("projection u(x)=x, Gaussian 2D, s=1.5", r);
    row.pass = r.pass && std::fabs(r.lhs.value() + 2.0) <= 3.0 * r.lhs.error();
    rows.push_back(row);
  }
  // Projection identity with u = sin on a 1D mixture.
  {
    Rng rng(o.seed, 205);
    const data::GaussianMixture mix({0.3, 0.7}, {{-1.0}, {1.5}}, {0.4, 0.6});
    const PointSampler clean = [&](Rng& r) { return mix.sample_point(r); };
    const ProjectionFn u = [](std::span<const double> x) { return std::vector<double>{std::sin(x[0])}; };
    const ScoreFn score = [&](std::span<const double> x, double sigma) {
      return mix.diffused_score(x, sigma);
    };
    rows.push_back(identity_row("projection u=sin, 1D mixture, s=0.8",
                                check_projection_identity(clean, u, score, 0.8, n, rng)));
  }
  return rows;
}

std::vector<CheckRow> theorem1_suite(const VerifyOptions& o) {
  struct Case {
    std::vector<double> theta;
    double sigma;
  };
  const std::vector<Case> cases = {{{0.0}, 1.0}, {{1.0}, 1.0}, {{1.0, 1.0}, 2.0}, {{-0.7, 2.0}, 0.3}};
  std::vector<CheckRow> rows;
  Rng rng(o.seed, 301);
  for (const Case& c : cases) {
    const auto world = oracle::GaussianWorld::centered(c.theta.size());
    const Theorem1Report r = check_theorem1(world, c.theta, c.sigma, o.mc_samples, rng);
    std::string name = "theta=(";
    for (std::size_t i = 0; i < c.theta.size(); ++i) {
      name += (i ? "," : "") + std::to_string(c.theta[i]).substr(0, 5);
    }
    name += "), s=" + std::to_string(c.sigma).substr(0, 4);
    const double z = std::max({r.direct_z, r.projected_z, r.direct_vs_projected.z_score});
    rows.push_back({"theorem1", name, r.direct_vs_projected.rhs.value(), r.analytic, z, 3.0, r.pass});
  }
  return rows;
}

}  // namespace

std::vector<std::string> suite_names() { return {"toy", "identities", "theorem1", "all"}; }

std::vector<CheckRow> run_suite(const std::string& suite, const VerifyOptions& options) {
  if (suite == "toy") return toy_suite(options);
  if (suite == "identities") return identity_suite(options);
  if (suite == "theorem1") return theorem1_suite(options);
  if (suite == "all") {
    std::vector<CheckRow> rows = toy_suite(options);
    for (auto& r : identity_suite(options)) rows.push_back(std::move(r));
    for (auto& r : theorem1_suite(options)) rows.push_back(std::move(r));
    return rows;
  }
  throw std::invalid_argument("unknown suite '" + suite + "' (expected toy, identities, theorem1 or all)");
}

}  // namespace sid::eval
