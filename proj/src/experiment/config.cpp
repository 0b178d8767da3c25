// Copyright 2026 The ipmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ipmpc/experiment/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

namespace ipmpc::experiment {

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 5> kKinds{{
    {Kind::kDpBaseline, "dp-baseline"},
    {Kind::kLearnFixedTau, "learn-fixed-tau"},
    {Kind::kLearnHomotopy, "learn-homotopy"},
    {Kind::kSmoothingProfile, "smoothing-profile"},
    {Kind::kGradientDensity, "gradient-density"},
}};

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Typed access with the dotted path in every diagnostic.
class Reader {
 public:
  Reader(const Json& node, std::string path)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  Reader child(const std::string& key) const {
    return Reader(at(key), join(path_, key));
  }

  double number(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_number_integer()) {
      throw ConfigError(join(path_, key), "expected an integer");
    }
    return v.get<int>();
  }

  bool boolean(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(join(path_, key), "expected a boolean");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_array()) throw ConfigError(join(path_, key), "expected an array");
    std::vector<double> out;
    for (const Json& x : v) {
      if (!x.is_number()) {
        throw ConfigError(join(path_, key), "expected an array of numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  mpc::PolicyParams theta(const std::string& key) const {
    const auto v = numbers(key);
    if (v.size() != 2) {
      throw ConfigError(join(path_, key), "expected [theta1, theta2]");
    }
    return {v[0], v[1]};
  }

  const std::string& path() const { return path_; }

 private:
  const Json& at(const std::string& key) const {
    const auto it = node_.find(key);
    if (it == node_.end()) throw ConfigError(join(path_, key), "missing");
    return *it;
  }

  const Json& node_;
  std::string path_;
};

template <typename F>
void checked(const std::string& field, F&& validate) {
  try {
    validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

Json theta_json(const mpc::PolicyParams& p) {
  return Json::array({p.theta1, p.theta2});
}

}  // namespace

std::string_view kind_name(Kind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "unknown";
}

Kind parse_kind(std::string_view name) {
  for (const auto& [k, n] : kKinds) {
    if (n == name) return k;
  }
  std::string known;
  for (const auto& [k, n] : kKinds) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("kind", "unknown experiment kind '" + std::string(name) +
                                "' (expected one of " + known + ")");
}

Json to_json(const ExperimentConfig& c) {
  Json seeds = Json::array();
  for (auto s : c.seeds) seeds.push_back(s);
  const auto& e = c.env;
  const auto& m = c.mpc;
  const auto& sv = c.solver;
  const auto& g = c.dp.grid;
  const auto& l = c.learner;
  return Json{
      {"kind", std::string(kind_name(c.kind))},
      {"seeds", seeds},
      {"out", c.out},
      {"env",
       {{"alpha", e.alpha},
        {"buy_price", e.buy_price},
        {"sell_price", e.sell_price},
        {"max_power", e.max_power},
        {"noise_mean", e.noise_mean},
        {"noise_variance", e.noise_variance},
        {"noise_scale_is_variance", e.noise_scale_is_variance},
        {"penalty", e.penalty}}},
      {"mpc",
       {{"horizon", m.horizon},
        {"discount", m.discount},
        {"state_reference", m.state_reference},
        {"stage_weight", m.stage_weight},
        {"slack_weight", m.slack_weight},
        {"terminal_slack_weight", m.terminal_slack_weight}}},
      {"solver",
       {{"tolerance", sv.tolerance},
        {"max_iterations", sv.max_iterations},
        {"fraction_to_boundary", sv.fraction_to_boundary},
        {"regularization_min", sv.regularization_min},
        {"regularization_max", sv.regularization_max},
        {"max_backtracks", sv.max_backtracks}}},
      {"dp",
       {{"s_lo", g.s_lo},
        {"s_hi", g.s_hi},
        {"n_states", g.n_states},
        {"n_actions", g.n_actions},
        {"n_quadrature", g.n_quadrature},
        {"discount", g.discount},
        {"max_sweeps", g.max_sweeps},
        {"tolerance", c.dp.tolerance},
        {"rollouts", c.dp.rollouts},
        {"horizon", c.dp.horizon}}},
      {"learner",
       {{"initial_theta", theta_json(l.initial_theta)},
        {"initial_state", l.initial_state},
        {"discount", l.discount},
        {"learning_rate", l.learning_rate},
        {"gradient_clip", l.gradient_clip},
        {"exploration_stddev", l.exploration_stddev},
        {"ridge", l.ridge},
        {"batch_size", l.batch_size},
        {"steps", l.steps},
        {"max_failures", l.max_failures},
        {"eval_every", l.eval_every},
        {"eval_rollouts", l.eval_rollouts},
        {"eval_horizon", l.eval_horizon},
        {"eval_table_spacing", l.eval_table_spacing},
        {"eval_table_lo", l.eval_table_lo},
        {"eval_table_hi", l.eval_table_hi}}},
      {"tau",
       {{"initial", l.tau.initial},
        {"step", l.tau.step},
        {"floor", l.tau.floor}}},
      {"smoothing",
       {{"theta", theta_json(c.smoothing.theta)},
        {"s_lo", c.smoothing.s_lo},
        {"s_hi", c.smoothing.s_hi},
        {"n_points", c.smoothing.n_points},
        {"taus", c.smoothing.taus}}},
      {"density",
       {{"theta", theta_json(c.density.theta)},
        {"steps", c.density.steps},
        {"initial_state", c.density.initial_state},
        {"threshold", c.density.threshold},
        {"taus", c.density.taus}}},
  };
}

Json default_config() { return to_json(ExperimentConfig{}); }

ExperimentConfig from_json(const Json& tree) {
  const Reader root(tree, "");
  ExperimentConfig c;
  c.kind = parse_kind(root.string("kind"));
  c.out = root.string("out");
  {
    const auto raw = root.numbers("seeds");
    if (raw.empty()) throw ConfigError("seeds", "must not be empty");
    c.seeds.clear();
    for (double s : raw) {
      if (!(s >= 0.0 && s < 1.8e19) || s != std::floor(s)) {
        throw ConfigError("seeds", "seeds must be non-negative integers");
      }
      c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }

  const Reader e = root.child("env");
  c.env.alpha = e.number("alpha");
  c.env.buy_price = e.number("buy_price");
  c.env.sell_price = e.number("sell_price");
  c.env.max_power = e.number("max_power");
  c.env.noise_mean = e.number("noise_mean");
  c.env.noise_variance = e.number("noise_variance");
  c.env.noise_scale_is_variance = e.boolean("noise_scale_is_variance");
  c.env.penalty = e.number("penalty");
  checked("env", [&] { c.env.validate(); });

  // The MPC model shares the plant's gain, prices and bounds.
  const Reader m = root.child("mpc");
  c.mpc.horizon = m.integer("horizon");
  c.mpc.discount = m.number("discount");
  c.mpc.state_reference = m.number("state_reference");
  c.mpc.stage_weight = m.number("stage_weight");
  c.mpc.slack_weight = m.number("slack_weight");
  c.mpc.terminal_slack_weight = m.number("terminal_slack_weight");
  c.mpc.model_gain = c.env.alpha;
  c.mpc.max_power = c.env.max_power;
  c.mpc.buy_price = c.env.buy_price;
  c.mpc.sell_price = c.env.sell_price;
  checked("mpc", [&] { c.mpc.validate(); });

  const Reader sv = root.child("solver");
  c.solver.tolerance = sv.number("tolerance");
  c.solver.max_iterations = sv.integer("max_iterations");
  c.solver.fraction_to_boundary = sv.number("fraction_to_boundary");
  c.solver.regularization_min = sv.number("regularization_min");
  c.solver.regularization_max = sv.number("regularization_max");
  c.solver.max_backtracks = sv.integer("max_backtracks");
  checked("solver", [&] { c.solver.validate(); });

  const Reader d = root.child("dp");
  c.dp.grid.s_lo = d.number("s_lo");
  c.dp.grid.s_hi = d.number("s_hi");
  c.dp.grid.n_states = d.integer("n_states");
  c.dp.grid.n_actions = d.integer("n_actions");
  c.dp.grid.n_quadrature = d.integer("n_quadrature");
  c.dp.grid.discount = d.number("discount");
  c.dp.grid.max_sweeps = d.integer("max_sweeps");
  c.dp.tolerance = d.number("tolerance");
  c.dp.rollouts = d.integer("rollouts");
  c.dp.horizon = d.integer("horizon");
  checked("dp", [&] { c.dp.grid.validate(); });
  if (!(c.dp.tolerance > 0.0)) throw ConfigError("dp.tolerance", "must be > 0");
  checked("dp", [&] {
    dp::RolloutSettings rs;
    rs.discount = c.dp.grid.discount;
    rs.n_rollouts = c.dp.rollouts;
    rs.horizon = c.dp.horizon;
    rs.validate();
  });

  const Reader l = root.child("learner");
  auto& lc = c.learner;
  lc.initial_theta = l.theta("initial_theta");
  lc.initial_state = l.number("initial_state");
  lc.discount = l.number("discount");
  lc.learning_rate = l.number("learning_rate");
  lc.gradient_clip = l.number("gradient_clip");
  lc.exploration_stddev = l.number("exploration_stddev");
  lc.ridge = l.number("ridge");
  lc.batch_size = l.integer("batch_size");
  lc.steps = l.integer("steps");
  lc.max_failures = l.integer("max_failures");
  lc.eval_every = l.integer("eval_every");
  lc.eval_rollouts = l.integer("eval_rollouts");
  lc.eval_horizon = l.integer("eval_horizon");
  lc.eval_table_spacing = l.number("eval_table_spacing");
  lc.eval_table_lo = l.number("eval_table_lo");
  lc.eval_table_hi = l.number("eval_table_hi");

  const Reader t = root.child("tau");
  lc.tau.initial = t.number("initial");
  lc.tau.step = t.number("step");
  lc.tau.floor = t.number("floor");
  checked("tau", [&] { lc.tau.validate(); });
  checked("learner", [&] { lc.validate(); });

  const Reader sm = root.child("smoothing");
  c.smoothing.theta = sm.theta("theta");
  c.smoothing.s_lo = sm.number("s_lo");
  c.smoothing.s_hi = sm.number("s_hi");
  c.smoothing.n_points = sm.integer("n_points");
  c.smoothing.taus = sm.numbers("taus");
  if (c.smoothing.n_points < 2) {
    throw ConfigError("smoothing.n_points", "must be >= 2");
  }
  if (!(c.smoothing.s_hi > c.smoothing.s_lo)) {
    throw ConfigError("smoothing.s_hi", "must exceed smoothing.s_lo");
  }

  const Reader de = root.child("density");
  c.density.theta = de.theta("theta");
  c.density.steps = de.integer("steps");
  c.density.initial_state = de.number("initial_state");
  c.density.threshold = de.number("threshold");
  c.density.taus = de.numbers("taus");
  if (c.density.steps < 5) throw ConfigError("density.steps", "must be >= 5");
  if (!(c.density.threshold > 0.0)) {
    throw ConfigError("density.threshold", "must be > 0");
  }

  for (const auto& [field, taus] :
       {std::pair{"smoothing.taus", &c.smoothing.taus},
        std::pair{"density.taus", &c.density.taus}}) {
    if (taus->empty()) throw ConfigError(field, "must not be empty");
    for (double tau : *taus) {
      if (!(tau > 0.0)) throw ConfigError(field, "entries must be > 0");
    }
  }
  return c;
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ConfigError(path + ":" + std::to_string(line), e.what());
  }
}

void merge_config(Json& base, const Json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) throw ConfigError(prefix, "expected an object");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string path = join(prefix, it.key());
    auto target = base.find(it.key());
    if (target == base.end()) throw ConfigError(path, "unknown key");
    if (target->is_object()) {
      merge_config(*target, it.value(), path);
    } else {
      *target = it.value();
    }
  }
}

void apply_override(Json& tree, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(std::string(assignment), "override must be key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }

  Json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError(key, "unknown key");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw ConfigError(key, "cannot replace a section");
  *node = value;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const Json& tree) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(tree.dump())));
  return buf;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    auto part = text.substr(start, end - start);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    std::uint64_t v = 0;
    const auto [ptr, ec] =
        std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw ConfigError("seeds", "bad seed list '" + std::string(text) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace ipmpc::experiment
