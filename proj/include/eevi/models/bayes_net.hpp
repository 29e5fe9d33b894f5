// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/core/rng.hpp"
#include "eevi/model.hpp"

namespace eevi {

// Discrete Bayesian network with one conditional probability table per node.
//
// JSON schema:
//   {
//     "variables": [{"name": "A", "cardinality": 2}, ...],
//     "edges": [["A", "B"], ...],
//     "cpts": {"B": [[0.8, 0.2], [0.1, 0.9]], ...}
//   }
// A node's parents are ordered as its incoming edges appear in "edges". Each
// CPT is a row-major table with one row per parent configuration (first
// parent most significant) and one column per child state. Rows must sum to
// one within 1e-9 and the graph must be acyclic.
class DiscreteBayesNet final : public JointModel {
 public:
  struct Node {
    std::string name;
    int cardinality = 2;
    std::vector<std::size_t> parents;
    std::vector<double> cpt;  // rows x cardinality
    std::vector<double> log_cpt;
  };

  DiscreteBayesNet() = default;

  std::size_t add_variable(const std::string& name, int cardinality) {
    require(cardinality >= 1, ErrorCode::model_load,
            "node " + name + " has cardinality < 1");
    require(!index_.contains(name), ErrorCode::model_load,
            "duplicate node " + name);
    index_.emplace(name, nodes_.size());
    nodes_.push_back(Node{name, cardinality, {}, {}, {}});
    finalized_ = false;
    return nodes_.size() - 1;
  }

  void add_edge(const std::string& parent, const std::string& child) {
    const auto p = node_index(parent);
    const auto c = node_index(child);
    auto& ps = nodes_[c].parents;
    require(std::find(ps.begin(), ps.end(), p) == ps.end(),
            ErrorCode::model_load,
            "duplicate edge " + parent + " -> " + child);
    ps.push_back(p);
    finalized_ = false;
  }

  void set_cpt(const std::string& child,
               const std::vector<std::vector<double>>& rows) {
    auto& n = nodes_[node_index(child)];
    n.cpt.clear();
    for (const auto& r : rows) n.cpt.insert(n.cpt.end(), r.begin(), r.end());
    finalized_ = false;
  }

  // Validates CPT shapes and normalization, checks acyclicity and fixes the
  // topological order. Must be called before use.
  void finalize() {
    layout_ = Layout();
    for (auto& n : nodes_) {
      const std::size_t rows = parent_configurations(n);
      require(n.cpt.size() == rows * static_cast<std::size_t>(n.cardinality),
              ErrorCode::model_load,
              "CPT of node " + n.name + " has " + std::to_string(n.cpt.size()) +
                  " entries, expected " +
                  std::to_string(rows * static_cast<std::size_t>(n.cardinality)));
      n.log_cpt.resize(n.cpt.size());
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int k = 0; k < n.cardinality; ++k) {
          const double p = n.cpt[r * static_cast<std::size_t>(n.cardinality) +
                                 static_cast<std::size_t>(k)];
          require(std::isfinite(p) && p >= 0.0, ErrorCode::model_load,
                  "CPT of node " + n.name + " has a negative or non-finite entry");
          s += p;
        }
        if (std::abs(s - 1.0) > 1e-9) {
          std::ostringstream msg;
          msg << "CPT row " << r << " of node " << n.name << " sums to " << s;
          fail(ErrorCode::model_load, msg.str());
        }
      }
      for (std::size_t i = 0; i < n.cpt.size(); ++i)
        n.log_cpt[i] = n.cpt[i] > 0.0 ? std::log(n.cpt[i]) : neg_inf;
      layout_.add(Address::parse(n.name), Support::discrete(n.cardinality));
    }
    order_ = topological_sort();
    finalized_ = true;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t node_index(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorCode::model_load, "unknown node " + name);
    return it->second;
  }

  const Layout& layout() const override { return layout_; }
  std::string name() const override { return "bayesnet"; }

  std::vector<std::size_t> topological_order() const override { return order_; }

  void simulate(Rng& rng, std::span<double> z) const override {
    check_finalized();
    for (auto v : order_) sample_node(rng, v, z);
  }

  double log_joint(std::span<const double> z) const override {
    check_finalized();
    double lp = 0.0;
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      lp += node_log_prob(v, z);
      if (lp == neg_inf) return neg_inf;
    }
    return lp;
  }

  bool can_simulate_latents() const override { return true; }
  std::unique_ptr<LatentKernel> ancestral_kernel(
      const Selection& sel) const override {
    check_finalized();
    std::vector<std::size_t> latent_order;
    for (auto v : order_)
      if (!sel.is_target(v)) latent_order.push_back(v);
    return std::make_unique<AncestralKernel>(*this, std::move(latent_order));
  }

  bool can_resimulate_sites() const override { return true; }
  double resimulate_site(Rng& rng, std::size_t var,
                         std::span<double> z) const override {
    return sample_node(rng, var, z);
  }
  double site_log_density(std::size_t var,
                          std::span<const double> z) const override {
    return node_log_prob(var, z);
  }

  // log P(node = z[node] | parents = z[parents]); -inf outside the support.
  double node_log_prob(std::size_t v, std::span<const double> z) const {
    const auto& n = nodes_[v];
    const auto row = parent_row(n, z);
    if (!row) return neg_inf;
    const auto k = category(z[v], n.cardinality);
    if (!k) return neg_inf;
    return n.log_cpt[*row * static_cast<std::size_t>(n.cardinality) + *k];
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["variables"] = nlohmann::ordered_json::array();
    for (const auto& n : nodes_)
      j["variables"].push_back({{"name", n.name}, {"cardinality", n.cardinality}});
    j["edges"] = nlohmann::ordered_json::array();
    // Parent order per child is encoded by edge order; emit child-major.
    for (const auto& n : nodes_)
      for (auto p : n.parents)
        j["edges"].push_back(nlohmann::ordered_json::array({nodes_[p].name, n.name}));
    j["cpts"] = nlohmann::ordered_json::object();
    for (const auto& n : nodes_) {
      auto rows = nlohmann::ordered_json::array();
      const auto card = static_cast<std::size_t>(n.cardinality);
      for (std::size_t r = 0; r * card < n.cpt.size(); ++r)
        rows.push_back(std::vector<double>(
            n.cpt.begin() + static_cast<std::ptrdiff_t>(r * card),
            n.cpt.begin() + static_cast<std::ptrdiff_t>((r + 1) * card)));
      j["cpts"][n.name] = rows;
    }
    return j;
  }

  std::string to_json_string() const { return to_json().dump(2) + "\n"; }

  static DiscreteBayesNet from_json(const nlohmann::json& j) {
    DiscreteBayesNet net;
    try {
      for (const auto& v : j.at("variables"))
        net.add_variable(v.at("name").get<std::string>(),
                         v.at("cardinality").get<int>());
      for (const auto& e : j.at("edges")) {
        require(e.is_array() && e.size() == 2, ErrorCode::model_load,
                "edge entries must be [parent, child] pairs");
        net.add_edge(e[0].get<std::string>(), e[1].get<std::string>());
      }
      const auto& cpts = j.at("cpts");
      for (auto& n : net.nodes_) {
        require(cpts.contains(n.name), ErrorCode::model_load,
                "missing CPT for node " + n.name);
        const auto& t = cpts.at(n.name);
        n.cpt.clear();
        for (const auto& row : t) {
          if (row.is_array()) {
            for (const auto& x : row) n.cpt.push_back(x.get<double>());
          } else {
            n.cpt.push_back(row.get<double>());
          }
        }
      }
      for (auto it = cpts.begin(); it != cpts.end(); ++it)
        require(net.index_.contains(it.key()), ErrorCode::model_load,
                "CPT given for unknown node " + it.key());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::model_load, std::string("malformed network JSON: ") + e.what());
    }
    net.finalize();
    return net;
  }

  static DiscreteBayesNet load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::model_load, "cannot open " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::model_load, path + ": " + e.what());
    }
    return from_json(j);
  }

 private:
  class AncestralKernel final : public LatentKernel {
   public:
    AncestralKernel(const DiscreteBayesNet& net, std::vector<std::size_t> order)
        : net_(net), order_(std::move(order)) {}

    double simulate(Rng& rng, std::span<double> z) const override {
      double lq = 0.0;
      for (auto v : order_) lq += net_.sample_node(rng, v, z);
      return lq;
    }

    double assess(std::span<const double> z) const override {
      double lq = 0.0;
      for (auto v : order_) lq += net_.node_log_prob(v, z);
      return lq;
    }

   private:
    const DiscreteBayesNet& net_;
    std::vector<std::size_t> order_;
  };

  static std::optional<std::size_t> category(double x, int card) {
    if (!(x >= 0.0) || x >= static_cast<double>(card) || x != std::floor(x))
      return std::nullopt;
    return static_cast<std::size_t>(x);
  }

  std::size_t parent_configurations(const Node& n) const {
    std::size_t rows = 1;
    for (auto p : n.parents) rows *= static_cast<std::size_t>(nodes_[p].cardinality);
    return rows;
  }

  std::optional<std::size_t> parent_row(const Node& n,
                                        std::span<const double> z) const {
    std::size_t row = 0;
    for (auto p : n.parents) {
      const auto k = category(z[p], nodes_[p].cardinality);
      if (!k) return std::nullopt;
      row = row * static_cast<std::size_t>(nodes_[p].cardinality) + *k;
    }
    return row;
  }

  // Draws node v from its CPT row; returns the log probability of the draw.
  double sample_node(Rng& rng, std::size_t v, std::span<double> z) const {
    const auto& n = nodes_[v];
    const auto row = parent_row(n, z);
    require(row.has_value(), ErrorCode::invalid_argument,
            "parent of " + n.name + " is outside its support");
    const auto card = static_cast<std::size_t>(n.cardinality);
    const double* probs = n.cpt.data() + *row * card;
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t k = 0;
    std::size_t last = 0;
    for (; k < card; ++k) {
      if (probs[k] <= 0.0) continue;
      last = k;
      cum += probs[k];
      if (u < cum) break;
    }
    if (k == card) k = last;
    z[v] = static_cast<double>(k);
    return n.log_cpt[*row * card + k];
  }

  std::vector<std::size_t> topological_sort() const {
    std::vector<std::size_t> indeg(nodes_.size(), 0);
    std::vector<std::vector<std::size_t>> children(nodes_.size());
    for (std::size_t c = 0; c < nodes_.size(); ++c)
      for (auto p : nodes_[c].parents) {
        children[p].push_back(c);
        ++indeg[c];
      }
    // Kahn's algorithm, always taking the lowest ready index.
    std::vector<std::size_t> order;
    std::vector<bool> done(nodes_.size(), false);
    while (order.size() < nodes_.size()) {
      std::size_t pick = nodes_.size();
      for (std::size_t v = 0; v < nodes_.size(); ++v)
        if (!done[v] && indeg[v] == 0) {
          pick = v;
          break;
        }
      require(pick < nodes_.size(), ErrorCode::model_load,
              "network graph contains a cycle");
      done[pick] = true;
      order.push_back(pick);
      for (auto c : children[pick]) --indeg[c];
    }
    return order;
  }

  void check_finalized() const {
    require(finalized_, ErrorCode::invalid_argument,
            "DiscreteBayesNet used before finalize()");
  }

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::size_t> order_;
  Layout layout_;
  bool finalized_ = false;
};

// Layered synthetic diagnosis network: attributes -> diseases -> symptoms.
// Every disease has one or two attribute parents; every symptom has one or
// two disease parents and, with probability one half, an attribute parent.
// CPT rows are drawn so that conditional probabilities lie in [0.05, 0.95].
struct DiseaseNetSpec {
  int attributes = 3;
  int diseases = 2;
  int symptoms = 7;
  std::uint64_t seed = 12;
};

inline DiscreteBayesNet make_disease_network(const DiseaseNetSpec& spec) {
  Rng rng(derive_seed(spec.seed, {0x6469736561736555ULL}));
  DiscreteBayesNet net;
  std::vector<std::string> attrs, dis, syms;
  for (int i = 0; i < spec.attributes; ++i) {
    attrs.push_back("attr" + std::to_string(i));
    net.add_variable(attrs.back(), 2);
  }
  for (int i = 0; i < spec.diseases; ++i) {
    dis.push_back("disease" + std::to_string(i));
    net.add_variable(dis.back(), 2);
  }
  for (int i = 0; i < spec.symptoms; ++i) {
    syms.push_back("symptom" + std::to_string(i));
    net.add_variable(syms.back(), 2);
  }

  auto pick_distinct = [&](const std::vector<std::string>& pool, int count) {
    std::vector<std::string> out;
    while (static_cast<int>(out.size()) < count &&
           out.size() < pool.size()) {
      const auto& c = pool[rng.uniform_index(pool.size())];
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    return out;
  };
  auto random_rows = [&](std::size_t rows) {
    std::vector<std::vector<double>> t;
    for (std::size_t r = 0; r < rows; ++r) {
      const double p = 0.05 + 0.9 * rng.uniform();
      t.push_back({1.0 - p, p});
    }
    return t;
  };

  for (const auto& a : attrs) net.set_cpt(a, random_rows(1));
  for (const auto& d : dis) {
    const auto parents = pick_distinct(attrs, 1 + static_cast<int>(rng.uniform_index(2)));
    for (const auto& p : parents) net.add_edge(p, d);
    net.set_cpt(d, random_rows(std::size_t{1} << parents.size()));
  }
  for (const auto& s : syms) {
    auto parents = pick_distinct(dis, 1 + static_cast<int>(rng.uniform_index(2)));
    if (!attrs.empty() && rng.uniform() < 0.5)
      parents.push_back(attrs[rng.uniform_index(attrs.size())]);
    for (const auto& p : parents) net.add_edge(p, s);
    net.set_cpt(s, random_rows(std::size_t{1} << parents.size()));
  }
  net.finalize();
  return net;
}

// A -> B with P(A=1) = 0.3, P(B=1|A=1) = 0.9, P(B=1|A=0) = 0.2.
inline DiscreteBayesNet make_two_node_network() {
  DiscreteBayesNet net;
  net.add_variable("A", 2);
  net.add_variable("B", 2);
  net.add_edge("A", "B");
  net.set_cpt("A", {{0.7, 0.3}});
  net.set_cpt("B", {{0.8, 0.2}, {0.1, 0.9}});
  net.finalize();
  return net;
}

}  // namespace eevi
