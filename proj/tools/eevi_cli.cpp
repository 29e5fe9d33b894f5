// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

// Command line runner: one JSON config per invocation, CSV out.
//
// Exit codes: 0 ok, 2 config error, 3 model error, 4 invalid estimate.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eevi/eevi.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace eevi;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitModel = 3;
constexpr int kExitInvalid = 4;

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  fail(ErrorCode::config, path + ": " + msg);
}

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(path.empty() ? "config" : path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.contains(it.key())) config_error(join_path(path, it.key()), "unknown field");
}

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& need(const json& obj, const std::string& key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) config_error(join_path(path, key), "missing");
  return *v;
}

double get_double(const json& obj, const std::string& key, const std::string& path, double def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number()) config_error(join_path(path, key), "expected a number");
  return v->get<double>();
}

std::uint64_t get_uint(const json& obj, const std::string& key, const std::string& path,
                       std::uint64_t def, std::uint64_t min = 0) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number_unsigned() || v->get<std::uint64_t>() < min)
    config_error(join_path(path, key), "expected an integer >= " + std::to_string(min));
  return v->get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& path, bool def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_boolean()) config_error(join_path(path, key), "expected true or false");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& path,
                       const std::string& def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_string()) config_error(join_path(path, key), "expected a string");
  return v->get<std::string>();
}

std::vector<double> get_doubles(const json& obj, const std::string& key, const std::string& path,
                                std::vector<double> def = {}) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_array()) config_error(join_path(path, key), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : *v) {
    if (!x.is_number()) config_error(join_path(path, key), "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::size_t> get_sizes(const json& obj, const std::string& key, const std::string& path,
                                   std::vector<std::size_t> def = {}) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_array() || v->empty()) config_error(join_path(path, key), "expected a nonempty array of integers");
  std::vector<std::size_t> out;
  for (const auto& x : *v) {
    if (!x.is_number_unsigned() || x.get<std::size_t>() < 1)
      config_error(join_path(path, key), "expected positive integers");
    out.push_back(x.get<std::size_t>());
  }
  return out;
}

// ---------------------------------------------------------------- models

struct LoadedModel {
  std::unique_ptr<JointModel> model;
  std::string description;
};

SsmConfig parse_ssm(const json& j, const std::string& path) {
  check_keys(j, path, {"builtin", "horizon", "transition", "transition_var", "emission", "emission_var",
                       "input_gain", "init_mean", "init_var", "inputs", "gains", "gain_prior"});
  SsmConfig c;
  c.horizon = get_uint(j, "horizon", path, c.horizon, 1);
  c.transition = get_double(j, "transition", path, c.transition);
  c.transition_var = get_double(j, "transition_var", path, c.transition_var);
  c.emission = get_double(j, "emission", path, c.emission);
  c.emission_var = get_double(j, "emission_var", path, c.emission_var);
  c.input_gain = get_double(j, "input_gain", path, c.input_gain);
  c.init_mean = get_double(j, "init_mean", path, c.init_mean);
  c.init_var = get_double(j, "init_var", path, c.init_var);
  c.inputs = get_doubles(j, "inputs", path);
  c.gains = get_doubles(j, "gains", path, c.gains);
  c.gain_prior = get_doubles(j, "gain_prior", path);
  return c;
}

MvnModel make_mvn(const json& j, const std::string& path) {
  const auto d = get_uint(j, "d", path, 10, 1);
  const auto seed = get_uint(j, "seed", path, 2);
  const double ridge = get_double(j, "ridge", path, 0.5);
  if (ridge <= 0) config_error(join_path(path, "ridge"), "must be positive");
  return MvnModel::benchmark(d, seed, ridge);
}

LoadedModel load_model(const json& j, const fs::path& base_dir) {
  const std::string path = "model";
  if (!j.is_object()) config_error(path, "expected an object");
  if (const json* bn = find(j, "bn")) {
    check_keys(j, path, {"bn"});
    if (!bn->is_string()) config_error("model.bn", "expected a path");
    fs::path p = bn->get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return {std::make_unique<DiscreteBayesNet>(DiscreteBayesNet::load(p.string())), p.string()};
  }
  const std::string name = get_string(j, "builtin", path, "");
  if (name.empty()) config_error(path, "needs either \"bn\" or \"builtin\"");
  try {
    if (name == "two-node") {
      check_keys(j, path, {"builtin"});
      return {std::make_unique<DiscreteBayesNet>(make_two_node_network()), name};
    }
    if (name == "disease-net") {
      check_keys(j, path, {"builtin", "attributes", "diseases", "symptoms", "seed"});
      DiseaseNetSpec s;
      s.attributes = static_cast<int>(get_uint(j, "attributes", path, 3, 1));
      s.diseases = static_cast<int>(get_uint(j, "diseases", path, 2, 1));
      s.symptoms = static_cast<int>(get_uint(j, "symptoms", path, 7, 1));
      s.seed = get_uint(j, "seed", path, 12);
      return {std::make_unique<DiscreteBayesNet>(make_disease_network(s)), name};
    }
    if (name == "mvn") {
      check_keys(j, path, {"builtin", "d", "seed", "ridge"});
      return {std::make_unique<MvnModel>(make_mvn(j, path)), name};
    }
    if (name == "bivariate-normal") {
      check_keys(j, path, {"builtin", "rho"});
      const double rho = get_double(j, "rho", path, 0.5);
      if (!(std::abs(rho) < 1)) config_error("model.rho", "must lie in (-1, 1)");
      return {std::make_unique<MvnModel>(MvnModel::bivariate(rho)), name};
    }
    if (name == "ssm") return {std::make_unique<LinearGaussianSsm>(parse_ssm(j, path)), name};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument) config_error(path, e.what());
    throw;
  }
  config_error("model.builtin", "unknown model '" + name + "'");
}

// ---------------------------------------------------------------- settings

AddressSet parse_addresses(const json& v, const std::string& path, const Layout& layout) {
  if (!v.is_array()) config_error(path, "expected an array of addresses");
  AddressSet out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_string()) config_error(p, "expected an address string");
    Address a;
    try {
      a = Address::parse(v[i].get<std::string>());
    } catch (const Error& e) {
      config_error(p, e.what());
    }
    if (!layout.find(a)) config_error(p, "no address " + a.str() + " in the model");
    out.push_back(a);
  }
  return out;
}

ProposalSpec parse_proposal(const json* j) {
  ProposalSpec s;
  if (!j) return s;
  const std::string path = "proposal";
  check_keys(*j, path, {"base", "scheme", "particles", "inner_particles", "steps", "schedule",
                        "mh_moves", "training", "fit_seed"});
  s.base = get_string(*j, "base", path, s.base);
  s.scheme = get_string(*j, "scheme", path, s.scheme);
  s.particles = get_uint(*j, "particles", path, s.particles, 1);
  s.inner_particles = get_uint(*j, "inner_particles", path, s.inner_particles, 1);
  s.steps = get_uint(*j, "steps", path, s.steps);
  s.schedule = get_doubles(*j, "schedule", path);
  s.mh_moves = get_uint(*j, "mh_moves", path, s.mh_moves);
  s.training = get_uint(*j, "training", path, s.training, 2);
  s.fit_seed = get_uint(*j, "fit_seed", path, s.fit_seed);
  try {
    s.validate();
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return s;
}

struct EstimatorSettings {
  EstimatorConfig cfg;
  bool shared_outer = true;
};

EstimatorSettings parse_estimator(const json* j, std::optional<std::uint64_t> seed_override) {
  EstimatorSettings s;
  if (j) {
    const std::string path = "estimator";
    check_keys(*j, path, {"n", "m", "mcmc_steps", "seed", "workers", "shared_outer"});
    s.cfg.n = get_uint(*j, "n", path, s.cfg.n, 1);
    s.cfg.m = get_uint(*j, "m", path, s.cfg.m, 1);
    s.cfg.mcmc_steps = get_uint(*j, "mcmc_steps", path, s.cfg.mcmc_steps);
    s.cfg.seed = get_uint(*j, "seed", path, s.cfg.seed);
    s.cfg.workers = static_cast<unsigned>(get_uint(*j, "workers", path, 1, 1));
    s.shared_outer = get_bool(*j, "shared_outer", path, true);
  }
  if (seed_override) s.cfg.seed = *seed_override;
  return s;
}

// ---------------------------------------------------------------- output

const std::vector<std::string> kHeader{"query_id", "row",    "kind",     "target", "point", "stderr",
                                       "lower",    "upper",  "midpoint", "width",  "n",     "m",
                                       "P",        "proposal", "seed",   "valid",  "wall_time_ms"};

class Report {
 public:
  Report(std::ostream& os, bool timing) : w_(os, kHeader), timing_(timing) {}

  struct Context {
    std::string query_id;
    std::size_t n = 0, m = 0, particles = 0;
    std::string proposal;
    std::uint64_t seed = 0;
  };

  void bound(const Context& c, const std::string& kind, const std::string& target,
             const BoundEstimate& b, const IntervalEstimate& iv, double ms) {
    emit(c, kind, target, b.point, b.std_error, iv.lower.point, iv.upper.point, iv.midpoint(),
         iv.width(), b.valid, ms);
  }

  void interval(const Context& c, const std::string& prefix, const std::string& target,
                const IntervalEstimate& iv, double ms) {
    bound(c, prefix + "lower", target, iv.lower, iv, ms);
    bound(c, prefix + "upper", target, iv.upper, iv, ms);
  }

  void value(const Context& c, const std::string& kind, const std::string& target, double point,
             double se = std::numeric_limits<double>::quiet_NaN(), double ms = 0.0) {
    std::vector<csv::Cell> cells{c.query_id, std::int64_t(row_++), kind, target, point};
    cells.push_back(std::isnan(se) ? csv::Cell(std::string()) : csv::Cell(se));
    for (int i = 0; i < 4; ++i) cells.push_back(std::string());
    cells.push_back(std::uint64_t(c.n));
    cells.push_back(std::uint64_t(c.m));
    cells.push_back(c.particles ? csv::Cell(std::uint64_t(c.particles)) : csv::Cell(std::string()));
    cells.push_back(c.proposal);
    cells.push_back(std::uint64_t(c.seed));
    cells.push_back(std::isfinite(point));
    cells.push_back(timing_ ? ms : 0.0);
    valid_ = valid_ && std::isfinite(point);
    w_.row(cells);
  }

  void emit(const Context& c, const std::string& kind, const std::string& target, double point,
            double se, double lo, double hi, double mid, double width, bool valid, double ms) {
    w_.row({c.query_id, std::int64_t(row_++), kind, target, point, se, lo, hi, mid, width,
            std::uint64_t(c.n), std::uint64_t(c.m), std::uint64_t(c.particles), c.proposal,
            std::uint64_t(c.seed), valid, timing_ ? ms : 0.0});
    valid_ = valid_ && valid;
  }

  bool all_valid() const { return valid_; }
  bool timing() const { return timing_; }

 private:
  csv::Writer w_;
  bool timing_;
  std::int64_t row_ = 0;
  bool valid_ = true;
};

std::string address_list(const AddressSet& a) {
  std::string s;
  for (const auto& x : a) s += (s.empty() ? "" : ";") + x.str();
  return s;
}

std::string term_label(const Layout& layout, const PlanTerm& t) {
  std::string s = (t.coefficient > 0 ? "+" : "") + std::to_string(t.coefficient) + "*H(";
  for (std::size_t i = 0; i < t.vars.size(); ++i) s += (i ? ";" : "") + layout.address(t.vars[i]).str();
  return s + ")";
}

template <class F>
auto timed(F&& f, double& ms) {
  const auto t0 = std::chrono::steady_clock::now();
  auto r = f();
  ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Exact reference values where the model allows them.
std::optional<double> oracle_entropy(const JointModel& m, std::span<const std::size_t> vars) {
  if (const auto* mvn = dynamic_cast<const MvnModel*>(&m)) return mvn->subset_entropy(vars);
  if (m.layout().all_discrete()) {
    try {
      return EnumerationOracle(m).entropy(vars);
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- queries

struct Invocation {
  json config;
  fs::path base_dir;
  std::optional<std::uint64_t> seed;
  std::string output;
};

struct Session {
  LoadedModel model;
  ProposalSpec spec;
  EstimatorSettings est;
  std::string id;
};

Report::Context context(const Session& s) {
  return {s.id, s.est.cfg.n, s.est.cfg.m, s.spec.particles, s.spec.label(), s.est.cfg.seed};
}

SharingMode sharing(const Session& s) {
  return s.est.shared_outer ? SharingMode::shared_outer : SharingMode::iid;
}

void run_entropy(const Session& s, const json& q, Report& out, bool oracle) {
  const auto& m = *s.model.model;
  check_keys(q, "query", {"kind", "targets"});
  const auto targets = parse_addresses(need(q, "targets", "query"), "query.targets", m.layout());
  const auto sel = Selection::make(m.layout(), std::span<const Address>(targets), true);
  const auto ctx = context(s);
  if (sel.is_full()) {
    const auto b = entropy_plugin(m, s.est.cfg);
    IntervalEstimate iv;
    iv.lower = iv.upper = b;
    iv.lower.kind = BoundKind::lower;
    out.interval(ctx, "", sel.key(), iv, 0.0);
  } else {
    const auto q0 = make_proposal_factory(s.spec)(m, sel);
    double ms = 0.0;
    const auto iv = timed([&] { return entropy_interval(m, *q0, s.est.cfg, s.est.shared_outer); }, ms);
    out.interval(ctx, "", sel.key(), iv, ms);
  }
  if (oracle) {
    const auto v = oracle_entropy(m, sel.targets());
    if (!v) config_error("oracle", "no exact value for this model");
    out.value(ctx, "exact", sel.key(), *v);
  }
}

std::string canonical_measure(const std::string& kind) {
  if (kind == "interaction") return "interaction-information";
  if (kind == "dual") return "dual-correlation";
  return kind;
}

void run_measure(const Session& s, const json& q, Report& out, bool oracle) {
  const auto& m = *s.model.model;
  check_keys(q, "query", {"kind", "args", "conditioning"});
  MeasureKind kind;
  try {
    kind = parse_measure_kind(canonical_measure(get_string(q, "kind", "query", "")));
  } catch (const Error& e) {
    config_error("query.kind", e.what());
  }
  const auto& args_json = need(q, "args", "query");
  if (!args_json.is_array()) config_error("query.args", "expected an array of address arrays");
  std::vector<AddressSet> args;
  for (std::size_t i = 0; i < args_json.size(); ++i)
    args.push_back(parse_addresses(args_json[i], "query.args[" + std::to_string(i) + "]", m.layout()));
  AddressSet cond;
  if (const json* c = find(q, "conditioning")) cond = parse_addresses(*c, "query.conditioning", m.layout());
  CompositionPlan plan;
  try {
    plan = plan_measure(m.layout(), kind, args, cond, sharing(s));
  } catch (const Error& e) {
    config_error("query.args", e.what());
  }
  double ms = 0.0;
  const auto est = timed([&] { return estimate_measure(m, plan, make_proposal_factory(s.spec), s.est.cfg); }, ms);
  const auto ctx = context(s);
  for (const auto& t : est.terms)
    out.interval(ctx, "term-", term_label(m.layout(), t.term), t.interval, 0.0);
  const std::string label = measure_kind_name(kind);
  out.interval(ctx, "", label, est.interval, ms);
  if (oracle) {
    double v = 0.0;
    for (const auto& t : plan.terms) {
      const auto h = oracle_entropy(m, t.vars);
      if (!h) config_error("oracle", "no exact value for this model");
      v += t.coefficient * *h;
    }
    out.value(ctx, "exact", label, v);
  }
}

void run_rank(const Session& s, const json& q, Report& out, bool oracle) {
  const auto& m = *s.model.model;
  check_keys(q, "query", {"kind", "target", "conditioning", "candidates"});
  const auto target = parse_addresses(need(q, "target", "query"), "query.target", m.layout());
  AddressSet cond;
  if (const json* c = find(q, "conditioning")) cond = parse_addresses(*c, "query.conditioning", m.layout());
  const auto& cj = need(q, "candidates", "query");
  if (!cj.is_array() || cj.empty()) config_error("query.candidates", "expected a nonempty array");
  std::vector<std::pair<std::string, AddressSet>> cands;
  for (std::size_t i = 0; i < cj.size(); ++i) {
    const std::string p = "query.candidates[" + std::to_string(i) + "]";
    check_keys(cj[i], p, {"name", "addresses"});
    const std::string name = get_string(cj[i], "name", p, "");
    if (name.empty()) config_error(p + ".name", "missing");
    cands.push_back({name, parse_addresses(need(cj[i], "addresses", p), p + ".addresses", m.layout())});
  }
  std::vector<RankedCandidate> ranked;
  try {
    ranked = rank_by_conditional_entropy(m, cands, target, cond, make_proposal_factory(s.spec),
                                         s.est.cfg, sharing(s));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_selection) config_error("query.candidates", e.what());
    throw;
  }
  const auto ctx = context(s);
  for (const auto& r : ranked) {
    const auto& iv = r.estimate.interval;
    out.emit(ctx, "rank", r.name, iv.midpoint(), std::max(iv.lower.std_error, iv.upper.std_error),
             iv.lower.point, iv.upper.point, iv.midpoint(), iv.width(), iv.valid(), 0.0);
    if (oracle) {
      double v = 0.0;
      for (const auto& t : r.estimate.plan.terms) {
        const auto h = oracle_entropy(m, t.vars);
        if (!h) config_error("oracle", "no exact value for this model");
        v += t.coefficient * *h;
      }
      out.value(ctx, "exact", r.name, v);
    }
  }
}

void run_pair_grid(const Session& s, const json& q, Report& out) {
  const auto* ssm = dynamic_cast<const LinearGaussianSsm*>(s.model.model.get());
  if (!ssm) config_error("model.builtin", "pair-grid needs the ssm model");
  check_keys(q, "query", {"kind", "target"});
  AddressSet target{Address("theta")};
  if (const json* t = find(q, "target")) target = parse_addresses(*t, "query.target", ssm->layout());
  if (ssm->horizon() < 2) config_error("model.horizon", "pair grid needs a horizon of at least 2");
  double ms = 0.0;
  const auto grid = timed(
      [&] { return ssm_measurement_pair_grid(*ssm, target, make_proposal_factory(s.spec), s.est.cfg, sharing(s)); },
      ms);
  const auto ctx = context(s);
  for (const auto& c : grid.cells) {
    const auto& iv = c.estimate.interval;
    out.emit(ctx, "cell", "y@" + std::to_string(c.t1) + ",y@" + std::to_string(c.t2), iv.midpoint(),
             std::max(iv.lower.std_error, iv.upper.std_error), iv.lower.point, iv.upper.point,
             iv.midpoint(), iv.width(), iv.valid(), 0.0);
  }
  const auto& best = grid.cells[grid.argmax];
  const auto& iv = best.estimate.interval;
  out.emit(ctx, "argmax", "y@" + std::to_string(best.t1) + ",y@" + std::to_string(best.t2),
           iv.midpoint(), std::max(iv.lower.std_error, iv.upper.std_error), iv.lower.point,
           iv.upper.point, iv.midpoint(), iv.width(), iv.valid(), out.timing() ? ms : 0.0);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) config_error("output", "cannot write " + path);
  return f;
}

// Runs `body` with a CSV report on the configured destination.
template <class F>
int with_report(const Invocation& inv, F&& body) {
  std::string out_path = inv.output;
  if (out_path.empty()) out_path = get_string(inv.config, "output", "", "");
  const bool timing = get_bool(inv.config, "timing", "", false);
  std::ostringstream buf;
  Report rep(buf, timing);
  body(rep);
  if (out_path.empty() || out_path == "-") {
    std::cout << buf.str();
  } else {
    auto f = open_output(out_path);
    f << buf.str();
  }
  if (!rep.all_valid()) {
    std::cerr << "error: invalid estimate (non-finite weights); see the valid column\n";
    return kExitInvalid;
  }
  return 0;
}

Session open_session(const Invocation& inv, const json& model_json) {
  Session s;
  s.model = load_model(model_json, inv.base_dir);
  s.spec = parse_proposal(find(inv.config, "proposal"));
  s.est = parse_estimator(find(inv.config, "estimator"), inv.seed);
  s.id = get_string(inv.config, "id", "", "");
  return s;
}

int cmd_run(const Invocation& inv, const std::string& forced_kind = "") {
  const auto& c = inv.config;
  check_keys(c, "", {"id", "model", "query", "proposal", "estimator", "output", "timing", "oracle"});
  auto s = open_session(inv, need(c, "model", ""));
  const auto& q = need(c, "query", "");
  if (!q.is_object()) config_error("query", "expected an object");
  const std::string kind = get_string(q, "kind", "query", forced_kind);
  if (kind.empty()) config_error("query.kind", "missing");
  if (!forced_kind.empty() && kind != forced_kind)
    config_error("query.kind", "this subcommand runs '" + forced_kind + "' queries");
  if (s.id.empty()) s.id = kind;
  const bool oracle = get_bool(c, "oracle", "", false);
  return with_report(inv, [&](Report& rep) {
    if (kind == "entropy") return run_entropy(s, q, rep, oracle);
    if (kind == "rank") return run_rank(s, q, rep, oracle);
    if (kind == "pair-grid") return run_pair_grid(s, q, rep);
    run_measure(s, q, rep, oracle);
  });
}

// Shared MVN benchmark block of the experiment subcommands.
struct MvnBench {
  std::unique_ptr<MvnModel> model;
  Selection sel;
  double truth = 0.0;
};

MvnBench parse_mvn_bench(const json& e, const std::string& path) {
  const auto d = get_uint(e, "d", path, 10, 2);
  if (d % 2 != 0 || d > 100) config_error(join_path(path, "d"), "must be even and at most 100");
  const auto split = get_uint(e, "split", path, d / 2, 1);
  if (split >= d) config_error(join_path(path, "split"), "must be below d");
  MvnBench b;
  json mj{{"d", d}, {"seed", get_uint(e, "model_seed", path, 2)}, {"ridge", get_double(e, "ridge", path, 0.05)}};
  b.model = std::make_unique<MvnModel>(make_mvn(mj, path));
  AddressSet t;
  for (std::size_t i = 0; i < split; ++i) t.emplace_back("z" + std::to_string(i));
  b.sel = Selection::make(b.model->layout(), std::span<const Address>(t));
  b.truth = b.model->subset_entropy(b.sel);
  return b;
}

int cmd_experiment_mvn(const Invocation& inv) {
  const auto& c = inv.config;
  check_keys(c, "", {"id", "experiment", "proposal", "estimator", "output", "timing"});
  const auto& e = need(c, "experiment", "");
  check_keys(e, "experiment", {"d", "split", "ridge", "model_seed", "proposals", "particles"});
  const auto bench = parse_mvn_bench(e, "experiment");
  std::vector<std::string> bases{"prior", "regression"};
  if (const json* p = find(e, "proposals")) {
    if (!p->is_array() || p->empty()) config_error("experiment.proposals", "expected a nonempty array");
    bases.clear();
    for (const auto& x : *p) {
      if (!x.is_string()) config_error("experiment.proposals", "expected proposal base names");
      bases.push_back(x.get<std::string>());
    }
  }
  const auto grid = get_sizes(e, "particles", "experiment", {4, 16, 64, 256, 1024});
  const auto base_spec = parse_proposal(find(c, "proposal"));
  const auto est = parse_estimator(find(c, "estimator"), inv.seed);
  const std::string id = get_string(c, "id", "", "mvn");
  return with_report(inv, [&](Report& rep) {
    Report::Context truth_ctx{id, est.cfg.n, est.cfg.m, 0, "analytic", est.cfg.seed};
    rep.value(truth_ctx, "truth", bench.sel.key(), bench.truth);
    for (const auto& base : bases) {
      for (auto p : grid) {
        ProposalSpec spec = base_spec;
        spec.base = base;
        spec.particles = p;
        try {
          spec.validate();
        } catch (const Error& err) {
          config_error("experiment.proposals", err.what());
        }
        const auto q = make_proposal_factory(spec)(*bench.model, bench.sel);
        double ms = 0.0;
        const auto iv = timed([&] { return entropy_interval(*bench.model, *q, est.cfg, est.shared_outer); }, ms);
        rep.interval({id, est.cfg.n, est.cfg.m, p, spec.label(), est.cfg.seed}, "", bench.sel.key(), iv, ms);
      }
    }
  });
}

int cmd_baseline_compare(const Invocation& inv) {
  const auto& c = inv.config;
  check_keys(c, "", {"id", "experiment", "proposal", "estimator", "output", "timing"});
  const auto& e = need(c, "experiment", "");
  check_keys(e, "experiment", {"d", "split", "ridge", "model_seed", "particles", "knn"});
  const auto bench = parse_mvn_bench(e, "experiment");
  const auto grid = get_sizes(e, "particles", "experiment", {1, 4, 16, 64});
  KnnEntropyConfig kc;
  std::vector<std::size_t> sizes{500, 2000, 8000};
  std::size_t repeats = 4;
  std::uint64_t knn_seed = 0;
  if (const json* k = find(e, "knn")) {
    check_keys(*k, "experiment.knn", {"k", "sizes", "repeats", "seed"});
    kc.k = get_uint(*k, "k", "experiment.knn", kc.k, 1);
    sizes = get_sizes(*k, "sizes", "experiment.knn", sizes);
    repeats = get_uint(*k, "repeats", "experiment.knn", repeats, 1);
    knn_seed = get_uint(*k, "seed", "experiment.knn", knn_seed);
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] <= kc.k) config_error("experiment.knn.sizes", "every size must exceed k");
    if (i && sizes[i] <= sizes[i - 1]) config_error("experiment.knn.sizes", "must increase");
  }
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) config_error("experiment.particles", "must increase");
  const auto spec0 = parse_proposal(find(c, "proposal"));
  const auto est = parse_estimator(find(c, "estimator"), inv.seed);
  kc.workers = est.cfg.workers;
  const std::string id = get_string(c, "id", "", "baseline");
  const auto& m = *bench.model;
  const auto& vars = bench.sel.targets();
  const gaussian::Matrix chol = gaussian::cholesky(gaussian::submatrix(m.cov(), vars, vars)).matrixL();
  const gaussian::Vector mean = gaussian::subvector(m.mean(), vars);

  std::vector<IntervalEstimate> intervals;
  std::vector<TimingTask> tasks{
      {"knn", std::vector<double>(sizes.begin(), sizes.end()),
       [&](double nd) {
         const auto n = static_cast<std::size_t>(nd);
         const std::size_t d = vars.size();
         std::vector<double> values;
         for (std::size_t r = 0; r < repeats; ++r) {
           Rng rng(derive_seed(knn_seed, {n, r}));
           SampleMatrix s{n, d, std::vector<double>(n * d)};
           gaussian::Vector z(static_cast<Eigen::Index>(d));
           for (std::size_t i = 0; i < n; ++i) {
             for (auto& v : z) v = rng.normal();
             const gaussian::Vector x = mean + chol * z;
             for (std::size_t j = 0; j < d; ++j) s.data[i * d + j] = x(static_cast<Eigen::Index>(j));
           }
           values.push_back(knn_entropy(s, kc));
         }
         return values;
       }},
      {"eevi", std::vector<double>(grid.begin(), grid.end()),
       [&](double p) {
         ProposalSpec spec = spec0;
         spec.particles = static_cast<std::size_t>(p);
         const auto q = make_proposal_factory(spec)(m, bench.sel);
         intervals.push_back(entropy_interval(m, *q, est.cfg, est.shared_outer));
         return std::vector<double>{intervals.back().width()};
       }},
  };
  const auto recs = runtime_profile(tasks);
  return with_report(inv, [&](Report& rep) {
    Report::Context truth_ctx{id, 0, 0, 0, "analytic", est.cfg.seed};
    rep.value(truth_ctx, "truth", bench.sel.key(), bench.truth);
    std::size_t next_interval = 0;
    for (const auto& r : recs) {
      if (r.estimator == "knn") {
        Report::Context ctx{id, static_cast<std::size_t>(r.parameter), r.values.size(), 0,
                            "knn:k" + std::to_string(kc.k), knn_seed};
        const double mu = stats::mean(r.values);
        const double se = r.values.size() > 1 ? stats::stderr_of_mean(r.values)
                                              : std::numeric_limits<double>::quiet_NaN();
        rep.value(ctx, "knn", bench.sel.key(), mu, se, r.wall_time_ms);
      } else {
        ProposalSpec spec = spec0;
        spec.particles = static_cast<std::size_t>(r.parameter);
        rep.interval({id, est.cfg.n, est.cfg.m, spec.particles, spec.label(), est.cfg.seed}, "",
                     bench.sel.key(), intervals[next_interval++], r.wall_time_ms);
      }
    }
  });
}

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("config", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    config_error("config", std::string("not valid JSON: ") + e.what());
  }
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::model_load:
    case ErrorCode::too_large_to_enumerate:
    case ErrorCode::singular_submatrix:
      return kExitModel;
    case ErrorCode::all_weights_zero:
    case ErrorCode::zero_density_conditioning_point:
    case ErrorCode::particle_collapse:
    case ErrorCode::degenerate_sample:
      return kExitInvalid;
    default:
      return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy interval estimation by inference"};
  app.require_subcommand(1);
  std::string config_path, output;
  std::optional<std::uint64_t> seed;
  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs{
      {"run", "run the single query of a config"},
      {"experiment-mvn", "bound trajectories over particle counts on a Gaussian benchmark"},
      {"experiment-rank", "rank candidate sets by conditional entropy"},
      {"experiment-pair-grid", "information from each pair of observation times of a state space model"},
      {"baseline-compare", "kNN entropy against EEVI bounds along their parameter grids"},
  };
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("config", config_path, "JSON config file")->required();
    sc->add_option("--seed", seed, "override estimator.seed");
    sc->add_option("--output,-o", output, "CSV path, '-' for stdout");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    Invocation inv;
    inv.config = read_config(config_path);
    inv.base_dir = fs::absolute(config_path).parent_path();
    inv.seed = seed;
    inv.output = output;
    if (!inv.config.is_object()) config_error("config", "expected a JSON object");
    if (cmd == "run") return cmd_run(inv);
    if (cmd == "experiment-rank") return cmd_run(inv, "rank");
    if (cmd == "experiment-pair-grid") return cmd_run(inv, "pair-grid");
    if (cmd == "experiment-mvn") return cmd_experiment_mvn(inv);
    return cmd_baseline_compare(inv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
