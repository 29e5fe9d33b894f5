// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch_amalgamated.hpp>

#include <cmath>

#include "eevi/eevi.hpp"

using namespace eevi;
using Catch::Approx;

namespace {

// y = 3 always, x ~ N(1, 1). Used for the constant-regressor case.
class ConstantTarget final : public JointModel {
 public:
  ConstantTarget() {
    layout_.add("x", Support::real());
    layout_.add("y", Support::real());
  }
  const Layout& layout() const override { return layout_; }
  std::string name() const override { return "constant-target"; }
  void simulate(Rng& rng, std::span<double> z) const override {
    z[0] = 1.0 + rng.normal();
    z[1] = 3.0;
  }
  double log_joint(std::span<const double> z) const override {
    return z[1] == 3.0 ? stats::normal_log_density(z[0], 1.0, 1.0) : neg_inf;
  }

 private:
  Layout layout_;
};

double fresh_target_point(const JointModel& m, Rng& rng, Point& z) {
  z.resize(m.layout().width());
  m.simulate(rng, z);
  return m.log_joint(z);
}

}  // namespace

TEST_CASE("basic proposals: assess reproduces propose") {
  Rng rng(1);
  const auto mvn = MvnModel::benchmark(6);
  const auto sel = Selection::make(mvn.layout(), {"z0", "z2", "z4"});
  Rng fit(2);
  const auto reg = fit_regression_proposal(mvn, sel, 2000, fit);
  const PriorProposal prior(mvn, sel);
  const ExactGaussianProposal exact(mvn, sel);
  const auto net = make_disease_network({});
  const auto bsel = Selection::make(net.layout(), {"symptom0", "symptom3"});
  const PriorProposal bprior(net, bsel);
  const EnumeratedPosteriorProposal benum(net, bsel);
  const std::vector<std::pair<const JointModel*, const BasicProposal*>> cases{
      {&mvn, &reg}, {&mvn, &prior}, {&mvn, &exact}, {&net, &bprior}, {&net, &benum}};
  for (const auto& [m, q] : cases) {
    Point z;
    for (int i = 0; i < 50; ++i) {
      fresh_target_point(*m, rng, z);
      const double lq = q->propose(rng, z);
      CHECK(std::isfinite(lq));
      CHECK(std::abs(q->assess(z) - lq) < 1e-9);
    }
  }
}

TEST_CASE("prior proposal on the two node net") {
  const auto net = make_two_node_network();
  const auto sel = Selection::make(net.layout(), {"B"});
  const PriorProposal q(net, sel);
  Rng rng(3);
  Point z{0.0, 1.0};
  for (int i = 0; i < 10; ++i) {
    const double lq = q.propose(rng, z);
    CHECK(lq == Approx(std::log(z[0] == 1.0 ? 0.3 : 0.7)));
  }
}

TEST_CASE("prior proposal moments on mvn") {
  const auto mvn = MvnModel::bivariate(0.7);
  const auto sel = Selection::make(mvn.layout(), {"z1"});
  const PriorProposal q(mvn, sel);
  Rng rng(4);
  Point z{0.0, 2.5};
  const int n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) {
    q.propose(rng, z);
    x = z[0];
  }
  CHECK(std::abs(stats::mean(xs)) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("regression proposal fits") {
  Rng rng(5);
  {
    const auto m = MvnModel::bivariate(0.0);
    const auto r = fit_regression_proposal(m, Selection::make(m.layout(), {"z1"}), 10000, rng);
    CHECK(std::abs(r.slopes()(0, 0)) < 0.05);
  }
  {
    const auto m = MvnModel::bivariate(0.8);
    const auto r = fit_regression_proposal(m, Selection::make(m.layout(), {"z1"}), 10000, rng);
    CHECK(std::abs(r.slopes()(0, 0) - 0.8) < 0.05);
    CHECK(r.residual_variance()(0) == Approx(0.36).margin(0.02));
    CHECK(r.trained_on() == 10000);
  }
  {
    const ConstantTarget m;
    Rng a(6), b(6);
    const auto r = fit_regression_proposal(m, Selection::make(m.layout(), {"y"}), 500, a);
    std::vector<double> xs(500);
    Point z(2);
    for (auto& x : xs) {
      m.simulate(b, z);
      x = z[0];
    }
    CHECK(r.slopes()(0, 0) == 0.0);
    CHECK(r.intercept()(0) == Approx(stats::mean(xs)).epsilon(1e-12));
  }
  const auto net = make_two_node_network();
  try {
    fit_regression_proposal(net, Selection::make(net.layout(), {"B"}), 1000, rng);
    FAIL("expected NonRealVariables");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_real_variables);
  }
  const auto m = MvnModel::bivariate(0.5);
  try {
    fit_regression_proposal(m, Selection::make(m.layout(), {"z1"}), 19, rng);
    FAIL("expected InsufficientTrainingData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_training_data);
  }
}

TEST_CASE("SIR weight arithmetic") {
  std::vector<double> r{0.0, std::log(3.0)};
  CHECK(sir_log_weight(r) == Approx(std::log(2.0)).epsilon(1e-15));
  std::vector<double> twos{std::log(2.0), std::log(2.0)};
  CHECK(-sir_log_weight(twos) == Approx(-std::log(2.0)).epsilon(1e-15));

  const auto net = make_two_node_network();
  const auto sel = Selection::make(net.layout(), {"B"});
  auto base = std::make_shared<PriorProposal>(net, sel);
  const SirProposal sir1(net, base, 1);
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    Point z{0.0, double(i % 2)};
    const auto d = sir1.propose(rng, z);
    CHECK(d.log_weight == net.log_joint(z) - base->assess(z));
    const auto a = sir1.propose_aux(rng, z);
    CHECK(a.log_weight == -(net.log_joint(z) - base->assess(z)));
  }
}

TEST_CASE("SIR selection frequencies on frozen particles") {
  Rng rng(8);
  const std::vector<double> lr{std::log(0.1), std::log(0.6), std::log(0.3), neg_inf};
  const int n = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[sir_select(rng, lr)];
  const double p[4] = {0.1, 0.6, 0.3, 0.0};
  for (int k = 0; k < 4; ++k) {
    const double sd = std::sqrt(p[k] * (1 - p[k]) / n);
    CHECK(std::abs(counts[k] / double(n) - p[k]) <= 3 * sd + 1e-12);
  }
}

TEST_CASE("SIR extended weight identity via densities") {
  const auto mvn = MvnModel::benchmark(4);
  const auto sel = Selection::make(mvn.layout(), {"z1", "z3"});
  auto base = std::make_shared<PriorProposal>(mvn, sel);
  Rng rng(9);
  for (int c = 0; c < 200; ++c) {
    const SirProposal sir(mvn, base, 1 + rng.uniform_index(16));
    Point z(4);
    mvn.simulate(rng, z);
    const auto d = sir.propose(rng, z);
    CHECK(d.log_weight == logsumexp(d.log_ratios) - std::log(double(d.log_ratios.size())));
    const double via = mvn.log_joint(z) + SirProposal::log_r_extended(d) -
                       SirProposal::log_q_extended(d);
    CHECK(std::abs(via - d.log_weight) < 1e-12 * std::max(1.0, std::abs(d.log_weight)));
  }
}

TEST_CASE("SIR errors") {
  const auto net = make_two_node_network();
  const auto sel = Selection::make(net.layout(), {"A"});
  // Proposal for B that never matches the impossible-B model below.
  DiscreteBayesNet det;
  det.add_variable("A", 2);
  det.add_variable("B", 2);
  det.add_edge("A", "B");
  det.set_cpt("A", {{1.0, 0.0}});
  det.set_cpt("B", {{1.0, 0.0}, {0.0, 1.0}});
  det.finalize();
  const auto dsel = Selection::make(det.layout(), {"A"});
  // Prior on B given A=1 draws B=1, but A=1 has zero prior mass.
  const SirProposal sir(det, std::make_shared<PriorProposal>(det, dsel), 4);
  Rng rng(10);
  Point z{1.0, 0.0};
  try {
    sir.propose(rng, z);
    FAIL("expected AllWeightsZero");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::all_weights_zero);
  }
  try {
    sir.propose_aux(rng, z);
    FAIL("expected ZeroDensityConditioningPoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::zero_density_conditioning_point);
  }
  (void)sel;
}

TEST_CASE("SIR weights are unbiased for p(y) and 1/p(y)") {
  const auto net = make_two_node_network();
  const auto sel = Selection::make(net.layout(), {"B"});
  const SirProposal sir(net, std::make_shared<PriorProposal>(net, sel), 3);
  Rng rng(11);
  const int n = 100000;
  std::vector<double> w(n), winv(n);
  for (int i = 0; i < n; ++i) {
    Point z{0.0, 1.0};
    w[i] = std::exp(sir.propose(rng, z).log_weight);
    Point x{rng.uniform() < 0.9 * 0.3 / 0.41 ? 1.0 : 0.0, 1.0};  // x ~ p(A | B = 1)
    winv[i] = std::exp(sir.propose_aux(rng, x).log_weight);
  }
  CHECK(std::abs(stats::mean(w) - 0.41) < 3 * stats::stderr_of_mean(w));
  CHECK(std::abs(stats::mean(winv) - 1 / 0.41) < 3 * stats::stderr_of_mean(winv));
}

TEST_CASE("nested SIR weights are unbiased") {
  const auto net = make_two_node_network();
  const auto sel = Selection::make(net.layout(), {"B"});
  auto inner = std::make_shared<SirProposal>(net, std::make_shared<PriorProposal>(net, sel), 2);
  const NestedSirProposal nested(net, inner, 3);
  Rng rng(12);
  const int n = 50000;
  std::vector<double> w(n), winv(n);
  for (int i = 0; i < n; ++i) {
    Point z{0.0, 0.0};
    w[i] = std::exp(nested.propose_log_weight(rng, z));
    CHECK((z[0] == 0.0 || z[0] == 1.0));
    Point x{rng.uniform() < 0.1 * 0.3 / 0.59 ? 1.0 : 0.0, 0.0};  // p(A | B = 0)
    winv[i] = std::exp(nested.aux_log_weight(rng, x));
  }
  CHECK(std::abs(stats::mean(w) - 0.59) < 3 * stats::stderr_of_mean(w));
  CHECK(std::abs(stats::mean(winv) - 1 / 0.59) < 3 * stats::stderr_of_mean(winv));
}

TEST_CASE("SMC with T = 0 reproduces SIR exactly") {
  const auto mvn = MvnModel::benchmark(6);
  const auto sel = Selection::make(mvn.layout(), {"z0", "z1", "z2"});
  auto base = std::make_shared<PriorProposal>(mvn, sel);
  for (std::size_t p : {1u, 7u, 32u}) {
    const SirProposal sir(mvn, base, p);
    const SmcProposal smc(mvn, std::make_shared<TemperedKernels>(mvn, base, std::vector<double>{1.0}, 1), p);
    for (int rep = 0; rep < 20; ++rep) {
      Point z(6);
      Rng g(100 + rep);
      mvn.simulate(g, z);
      Point za = z, zb = z;
      Rng ra(rep), rb(rep);
      CHECK(sir.propose_log_weight(ra, za) == smc.propose_log_weight(rb, zb));
      CHECK(za == zb);
      CHECK(ra.next_u64() == rb.next_u64());
    }
  }
}

TEST_CASE("SMC degenerate cases") {
  const auto mvn = MvnModel::bivariate(0.5);
  const auto sel = Selection::make(mvn.layout(), {"z1"});
  auto base = std::make_shared<PriorProposal>(mvn, sel);
  // P = 1, T = 1 with an identity forward kernel.
  const SmcProposal smc(mvn, std::make_shared<TemperedKernels>(mvn, base, std::vector<double>{0.0, 1.0}, 0), 1);
  Rng rng(13);
  for (int i = 0; i < 10; ++i) {
    Point z{0.0, 0.3 * i};
    const auto d = smc.propose(rng, z);
    REQUIRE(d.step_log_means.size() == 2);
    CHECK(d.step_log_means[0] == 0.0);
    CHECK(d.log_weight == Approx(mvn.log_joint(z) - base->assess(z)).epsilon(1e-14));
  }
  // Conditional SMC with P = 1 and T = 0.
  const SmcProposal smc0(mvn, std::make_shared<TemperedKernels>(mvn, base, std::vector<double>{1.0}, 1), 1);
  Point z{0.4, -0.2};
  CHECK(smc0.aux_log_weight(rng, z) == base->assess(z) - mvn.log_joint(z));
}

namespace {

// Kernels with no backward kernel, for the CSMC error path.
class ForwardOnly final : public SmcKernels {
 public:
  ForwardOnly(const JointModel& m, std::shared_ptr<const BasicProposal> b) : m_(m), b_(std::move(b)) {}
  const Selection& selection() const override { return b_->selection(); }
  std::string id() const override { return "forward-only"; }
  std::size_t steps() const override { return 1; }
  double sample_initial(Rng& rng, std::span<double> s) const override { return b_->propose(rng, s); }
  double log_initial(std::span<const double> s) const override { return b_->assess(s); }
  double log_target(std::size_t, std::span<const double> s) const override { return m_.log_joint(s); }
  void sample_forward(std::size_t, Rng&, std::span<const double> p, std::span<double> n) const override {
    std::copy(p.begin(), p.end(), n.begin());
  }
  double log_incremental_weight(std::size_t, std::span<const double>, std::span<const double>) const override {
    return 0.0;
  }

 private:
  const JointModel& m_;
  std::shared_ptr<const BasicProposal> b_;
};

// Final target deliberately off by a constant.
class WrongTarget final : public SmcKernels {
 public:
  WrongTarget(const JointModel& m, std::shared_ptr<const BasicProposal> b) : m_(m), b_(std::move(b)) {}
  const Selection& selection() const override { return b_->selection(); }
  std::string id() const override { return "wrong"; }
  std::size_t steps() const override { return 0; }
  double sample_initial(Rng& rng, std::span<double> s) const override { return b_->propose(rng, s); }
  double log_initial(std::span<const double> s) const override { return b_->assess(s); }
  double log_target(std::size_t, std::span<const double> s) const override { return m_.log_joint(s) + 1.0; }
  void sample_forward(std::size_t, Rng&, std::span<const double>, std::span<double>) const override {}
  double log_incremental_weight(std::size_t, std::span<const double>, std::span<const double>) const override {
    return 0.0;
  }

 private:
  const JointModel& m_;
  std::shared_ptr<const BasicProposal> b_;
};

}  // namespace

TEST_CASE("SMC configuration errors") {
  const auto mvn = MvnModel::bivariate(0.5);
  const auto sel = Selection::make(mvn.layout(), {"z1"});
  auto base = std::make_shared<PriorProposal>(mvn, sel);
  const SmcProposal fwd(mvn, std::make_shared<ForwardOnly>(mvn, base), 4);
  Rng rng(14);
  Point z{0.1, 0.2};
  try {
    fwd.aux_log_weight(rng, z);
    FAIL("expected BackwardKernelUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::backward_kernel_unavailable);
  }
  CHECK_THROWS_AS(SmcProposal(mvn, std::make_shared<WrongTarget>(mvn, base), 2), Error);
  SmcConfig bad{4, 2, {0.0, 0.7, 0.5}, 1};
  CHECK_THROWS_AS(bad.validate(), Error);
  SmcConfig bad_end{4, 1, {0.0, 0.5}, 1};
  CHECK_THROWS_AS(bad_end.validate(), Error);
  SmcConfig ok{4, 3, {}, 1};
  CHECK(ok.betas() == std::vector<double>{0.0, 1.0 / 3, 2.0 / 3, 1.0});
}

TEST_CASE("tempered SMC weights are unbiased on the two node net") {
  const auto net = make_two_node_network();
  const auto sel = Selection::make(net.layout(), {"B"});
  auto base = std::make_shared<PriorProposal>(net, sel);
  const SmcProposal smc(net, std::make_shared<TemperedKernels>(net, base, SmcConfig{3, 3, {}, 1}.betas(), 1), 3);
  Rng rng(15);
  const int n = 40000;
  std::vector<double> w(n), winv(n);
  for (int i = 0; i < n; ++i) {
    Point z{0.0, 1.0};
    w[i] = std::exp(smc.propose_log_weight(rng, z));
    Point x{rng.uniform() < 0.9 * 0.3 / 0.41 ? 1.0 : 0.0, 1.0};
    winv[i] = std::exp(smc.aux_log_weight(rng, x));
  }
  CHECK(std::abs(stats::mean(w) - 0.41) < 3 * stats::stderr_of_mean(w));
  CHECK(std::abs(stats::mean(winv) - 1 / 0.41) < 3 * stats::stderr_of_mean(winv));
}

TEST_CASE("particle filter SMC on a linear Gaussian SSM") {
  SsmConfig c;
  c.horizon = 5;
  const LinearGaussianSsm ssm(c);
  std::vector<Address> ys;
  std::vector<std::size_t> times;
  for (int t = 1; t <= 5; ++t) {
    ys.emplace_back("y", t);
    times.push_back(std::size_t(t));
  }
  const auto sel = Selection::make(ssm.layout(), std::span<const Address>(ys));
  const SmcProposal pf(ssm, std::make_shared<SsmFilterKernels>(ssm, sel), 8);
  Rng rng(16);
  Point z(ssm.layout().width());
  ssm.simulate(rng, z);
  std::vector<double> yv;
  for (auto t : times) yv.push_back(z[LinearGaussianSsm::y_slot(t)]);
  const double lpy = ssm.log_marginal_kalman(times, yv);
  const int n = 3000;
  std::vector<double> w(n), lw(n);
  for (int i = 0; i < n; ++i) {
    Point a = z;
    lw[i] = pf.propose_log_weight(rng, a);
    w[i] = std::exp(lw[i] - lpy);
  }
  CHECK(std::abs(stats::mean(w) - 1.0) < 3 * stats::stderr_of_mean(w));
  CHECK(stats::mean(lw) <= lpy);
  // Conditional SMC from the true latents; consistent as P grows.
  const SmcProposal big(ssm, std::make_shared<SsmFilterKernels>(ssm, sel), 512);
  std::vector<double> lwinv(40);
  for (auto& v : lwinv) v = -big.aux_log_weight(rng, z);
  CHECK(std::abs(stats::mean(lwinv) - lpy) < 0.05);
}
