// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/core/rng.hpp"

namespace eevi {

// Name of a model variable, optionally indexed by time step.
struct Address {
  std::string name;
  std::optional<int> time;

  Address() = default;
  Address(std::string n) : name(std::move(n)) {}  // NOLINT: implicit by design of call sites
  Address(const char* n) : name(n) {}             // NOLINT
  Address(std::string n, int t) : name(std::move(n)), time(t) {}

  auto operator<=>(const Address&) const = default;
  bool operator==(const Address&) const = default;

  // "name" or "name@t"
  std::string str() const {
    return time ? name + "@" + std::to_string(*time) : name;
  }

  static Address parse(std::string_view text) {
    const auto at = text.rfind('@');
    if (at == std::string_view::npos) return Address(std::string(text));
    const std::string t(text.substr(at + 1));
    require(!t.empty() && std::all_of(t.begin(), t.end(), ::isdigit),
            ErrorCode::invalid_argument,
            "malformed time index in address '" + std::string(text) + "'");
    return Address(std::string(text.substr(0, at)), std::stoi(t));
  }
};

struct Category {
  std::int64_t index = 0;
  auto operator<=>(const Category&) const = default;
};

using RealVector = std::vector<double>;
using Value = std::variant<Category, double, RealVector>;

enum class SupportKind { discrete, real, real_vector };

struct Support {
  SupportKind kind = SupportKind::real;
  int cardinality = 0;  // discrete only
  int length = 1;       // real_vector only

  static Support discrete(int k) { return {SupportKind::discrete, k, 1}; }
  static Support real() { return {SupportKind::real, 0, 1}; }
  static Support real_vector(int len) {
    return {SupportKind::real_vector, 0, len};
  }

  // Number of scalar slots the variable occupies in a packed point.
  int width() const { return kind == SupportKind::real_vector ? length : 1; }
  bool is_discrete() const { return kind == SupportKind::discrete; }
};

// Maps model addresses onto a flat vector of doubles ("point"). Discrete
// values are stored as their category index.
class Layout {
 public:
  Layout() = default;

  void add(Address address, Support support) {
    require(!index_.contains(address), ErrorCode::invalid_argument,
            "duplicate address " + address.str());
    require(support.width() >= 1, ErrorCode::invalid_argument,
            "empty real vector for " + address.str());
    index_.emplace(address, addresses_.size());
    addresses_.push_back(std::move(address));
    supports_.push_back(support);
    offsets_.push_back(width_);
    width_ += static_cast<std::size_t>(support.width());
  }

  std::size_t size() const { return addresses_.size(); }
  std::size_t width() const { return width_; }
  const std::vector<Address>& addresses() const { return addresses_; }
  const Address& address(std::size_t var) const { return addresses_[var]; }
  const Support& support(std::size_t var) const { return supports_[var]; }
  std::size_t offset(std::size_t var) const { return offsets_[var]; }

  std::optional<std::size_t> find(const Address& a) const {
    auto it = index_.find(a);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const Address& a) const {
    auto idx = find(a);
    require(idx.has_value(), ErrorCode::invalid_selection,
            "unknown address " + a.str());
    return *idx;
  }

  bool all_discrete() const {
    return std::all_of(supports_.begin(), supports_.end(),
                       [](const Support& s) { return s.is_discrete(); });
  }

  bool all_real() const {
    return std::none_of(supports_.begin(), supports_.end(),
                        [](const Support& s) { return s.is_discrete(); });
  }

 private:
  std::vector<Address> addresses_;
  std::vector<Support> supports_;
  std::vector<std::size_t> offsets_;
  std::map<Address, std::size_t> index_;
  std::size_t width_ = 0;
};

using Assignment = std::map<Address, Value>;
using Point = std::vector<double>;

inline Value read_value(const Layout& layout, std::size_t var,
                        std::span<const double> point) {
  const auto& s = layout.support(var);
  const auto off = layout.offset(var);
  switch (s.kind) {
    case SupportKind::discrete:
      return Category{static_cast<std::int64_t>(point[off])};
    case SupportKind::real:
      return point[off];
    case SupportKind::real_vector:
      return RealVector(point.begin() + static_cast<std::ptrdiff_t>(off),
                        point.begin() + static_cast<std::ptrdiff_t>(off) + s.length);
  }
  return point[off];
}

inline void write_value(const Layout& layout, std::size_t var, const Value& v,
                        std::span<double> point) {
  const auto& s = layout.support(var);
  const auto off = layout.offset(var);
  const auto& name = layout.address(var).str();
  switch (s.kind) {
    case SupportKind::discrete: {
      const auto* c = std::get_if<Category>(&v);
      require(c != nullptr, ErrorCode::invalid_argument,
              "expected a discrete value for " + name);
      point[off] = static_cast<double>(c->index);
      return;
    }
    case SupportKind::real: {
      const auto* d = std::get_if<double>(&v);
      require(d != nullptr && std::isfinite(*d), ErrorCode::invalid_argument,
              "expected a finite real value for " + name);
      point[off] = *d;
      return;
    }
    case SupportKind::real_vector: {
      const auto* r = std::get_if<RealVector>(&v);
      require(r != nullptr && static_cast<int>(r->size()) == s.length,
              ErrorCode::invalid_argument,
              "expected a real vector of length " + std::to_string(s.length) +
                  " for " + name);
      for (double x : *r)
        require(std::isfinite(x), ErrorCode::invalid_argument,
                "non-finite entry in " + name);
      std::copy(r->begin(), r->end(),
                point.begin() + static_cast<std::ptrdiff_t>(off));
      return;
    }
  }
}

inline bool is_complete(const Layout& layout, const Assignment& a) {
  if (a.size() != layout.size()) return false;
  return std::all_of(a.begin(), a.end(), [&](const auto& kv) {
    return layout.find(kv.first).has_value();
  });
}

inline Point pack(const Layout& layout, const Assignment& a) {
  require(is_complete(layout, a), ErrorCode::incomplete_assignment,
          "assignment keys do not match the model's addresses");
  Point z(layout.width(), 0.0);
  for (const auto& [addr, v] : a) write_value(layout, layout.index_of(addr), v, z);
  return z;
}

inline Assignment unpack(const Layout& layout, std::span<const double> point) {
  Assignment a;
  for (std::size_t v = 0; v < layout.size(); ++v)
    a.emplace(layout.address(v), read_value(layout, v, point));
  return a;
}

// Union of two assignments over disjoint key sets.
inline Assignment merge(const Assignment& a, const Assignment& b) {
  Assignment out = a;
  for (const auto& [k, v] : b) {
    require(!out.contains(k), ErrorCode::invalid_argument,
            "merge of assignments sharing address " + k.str());
    out.emplace(k, v);
  }
  return out;
}

// Partition of a model's variables into targets Y and latents X.
class Selection {
 public:
  Selection() = default;

  // Throws InvalidSelection for unknown or repeated addresses, an empty target
  // set, or (unless allow_full) a target set covering every address.
  static Selection make(const Layout& layout, std::span<const Address> targets,
                        bool allow_full = false) {
    require(!targets.empty(), ErrorCode::invalid_selection,
            "target set is empty");
    std::vector<bool> is_target(layout.size(), false);
    for (const auto& a : targets) {
      const auto idx = layout.index_of(a);
      require(!is_target[idx], ErrorCode::invalid_selection,
              "address listed twice: " + a.str());
      is_target[idx] = true;
    }
    Selection sel;
    for (std::size_t v = 0; v < layout.size(); ++v) {
      auto& vars = is_target[v] ? sel.targets_ : sel.latents_;
      auto& slots = is_target[v] ? sel.target_slots_ : sel.latent_slots_;
      vars.push_back(v);
      const auto off = layout.offset(v);
      for (int k = 0; k < layout.support(v).width(); ++k)
        slots.push_back(off + static_cast<std::size_t>(k));
      if (is_target[v]) sel.addresses_.push_back(layout.address(v));
    }
    require(allow_full || !sel.latents_.empty(), ErrorCode::invalid_selection,
            "target set covers every model address; no latents remain");
    sel.width_ = layout.width();
    return sel;
  }

  static Selection make(const Layout& layout,
                        std::initializer_list<Address> targets,
                        bool allow_full = false) {
    std::vector<Address> t(targets);
    return make(layout, std::span<const Address>(t), allow_full);
  }

  const std::vector<std::size_t>& targets() const { return targets_; }
  const std::vector<std::size_t>& latents() const { return latents_; }
  const std::vector<std::size_t>& target_slots() const { return target_slots_; }
  const std::vector<std::size_t>& latent_slots() const { return latent_slots_; }
  // Target addresses in model order.
  const std::vector<Address>& addresses() const { return addresses_; }
  std::size_t point_width() const { return width_; }
  bool is_full() const { return latents_.empty(); }

  bool is_target(std::size_t var) const {
    return std::binary_search(targets_.begin(), targets_.end(), var);
  }

  // "a;b;c@2" in model order; stable identifier for reports.
  std::string key() const {
    std::string out;
    for (const auto& a : addresses_) {
      if (!out.empty()) out += ';';
      out += a.str();
    }
    return out;
  }

  void copy_targets(std::span<const double> from, std::span<double> to) const {
    for (auto s : target_slots_) to[s] = from[s];
  }

  void copy_latents(std::span<const double> from, std::span<double> to) const {
    for (auto s : latent_slots_) to[s] = from[s];
  }

  std::vector<double> gather_latents(std::span<const double> z) const {
    std::vector<double> out(latent_slots_.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = z[latent_slots_[k]];
    return out;
  }

  void scatter_latents(std::span<const double> x, std::span<double> z) const {
    for (std::size_t k = 0; k < x.size(); ++k) z[latent_slots_[k]] = x[k];
  }

 private:
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> latents_;
  std::vector<std::size_t> target_slots_;
  std::vector<std::size_t> latent_slots_;
  std::vector<Address> addresses_;
  std::size_t width_ = 0;
};

// Conditional-ancestral kernel for the latents of one selection: simulates
// every latent variable from its model conditional given its parents, with
// targets held at the values already in z. The kernel is a normalized density
// over the latents for each fixed target value.
class LatentKernel {
 public:
  virtual ~LatentKernel() = default;
  // Overwrites the latent entries of z; returns their log kernel density.
  virtual double simulate(Rng& rng, std::span<double> z) const = 0;
  virtual double assess(std::span<const double> z) const = 0;
};

// Generative model p(z_1, ..., z_d): joint simulation plus pointwise joint
// log-density over packed points. Implementations are immutable after
// construction; all randomness flows through the caller's Rng.
class JointModel {
 public:
  virtual ~JointModel() = default;

  virtual const Layout& layout() const = 0;
  virtual std::string name() const = 0;

  // Writes a complete joint sample into z.
  virtual void simulate(Rng& rng, std::span<double> z) const = 0;

  // Log joint density in nats; -inf exactly when the density is zero.
  virtual double log_joint(std::span<const double> z) const = 0;

  // Capability: ancestral simulation of the latents of a selection given its
  // targets. See LatentKernel.
  virtual bool can_simulate_latents() const { return false; }
  virtual std::unique_ptr<LatentKernel> ancestral_kernel(const Selection&) const {
    fail(ErrorCode::capability_missing,
         name() + " cannot ancestrally simulate latents");
  }

  // Capability: single-site conditional-ancestral resimulation, used by the
  // Metropolis-Hastings refresh. resimulate_site overwrites variable `var`
  // in z and returns the log kernel density of the new value; site_log_density
  // evaluates that kernel at the value currently stored in z.
  virtual bool can_resimulate_sites() const { return false; }
  virtual double resimulate_site(Rng&, std::size_t, std::span<double>) const {
    fail(ErrorCode::capability_missing,
         name() + " does not support single-site resimulation");
  }
  virtual double site_log_density(std::size_t, std::span<const double>) const {
    fail(ErrorCode::capability_missing,
         name() + " does not support single-site resimulation");
  }

  // Variable indices in an order compatible with the model's dependencies.
  virtual std::vector<std::size_t> topological_order() const {
    std::vector<std::size_t> order(layout().size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    return order;
  }
};

inline Assignment simulate_joint(const JointModel& model, Rng& rng) {
  Point z(model.layout().width(), 0.0);
  model.simulate(rng, z);
  return unpack(model.layout(), z);
}

inline double log_joint_density(const JointModel& model, const Assignment& a) {
  const Point z = pack(model.layout(), a);
  return model.log_joint(z);
}

inline std::pair<Assignment, Assignment> split(const Assignment& a,
                                               const Selection& sel) {
  Assignment y, x;
  for (const auto& [k, v] : a) {
    const bool target =
        std::find(sel.addresses().begin(), sel.addresses().end(), k) !=
        sel.addresses().end();
    (target ? y : x).emplace(k, v);
  }
  require(y.size() == sel.addresses().size(), ErrorCode::incomplete_assignment,
          "assignment lacks some target addresses");
  return {std::move(y), std::move(x)};
}

}  // namespace eevi
