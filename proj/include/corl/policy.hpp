#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "corl/dynamics.hpp"
#include "corl/vec2.hpp"

namespace corl {

struct NeighborSlot {
  double dist{1.0};   // distance / sense_range, clipped to 1
  double angle{0.0};  // egocentric bearing / pi
  double present{0.0};
};

/// Egocentric, normalized policy input. Flattened layout:
/// [goal_dist, goal_angle, (dist, angle, present) x k].
struct Observation {
  double goal_dist{0.0};
  double goal_angle{0.0};
  std::vector<NeighborSlot> neighbors;

  std::size_t dim() const { return 2 + 3 * neighbors.size(); }

  std::vector<double> flatten() const {
    std::vector<double> x;
    x.reserve(dim());
    x.push_back(goal_dist);
    x.push_back(goal_angle);
    for (const auto& s : neighbors) {
      x.push_back(s.dist);
      x.push_back(s.angle);
      x.push_back(s.present);
    }
    return x;
  }
};

inline std::size_t observation_dim(int k) { return 2 + 3 * static_cast<std::size_t>(k); }

inline Observation build_observation(const AgentState& self, const Vec2& goal,
                                     std::span<const Vec2> neighbor_positions, int k, double sense_range) {
  if (k < 0) throw std::invalid_argument("build_observation: k must be >= 0");
  if (!(sense_range > 0.0)) throw std::invalid_argument("build_observation: sense_range must be positive");
  const Vec2 p = self.position();
  auto bearing = [&](const Vec2& target) {
    const Vec2 d = target - p;
    if (d.x == 0.0 && d.y == 0.0) return 0.0;
    return wrap_angle(std::atan2(d.y, d.x) - self.theta) / std::numbers::pi;
  };

  Observation obs;
  obs.goal_dist = std::min(1.0, norm(goal - p) / sense_range);
  obs.goal_angle = bearing(goal);

  struct Cand {
    double d;
    std::size_t idx;
  };
  std::vector<Cand> cands;
  for (std::size_t j = 0; j < neighbor_positions.size(); ++j) {
    const double d = norm(neighbor_positions[j] - p);
    if (d <= sense_range) cands.push_back({d, j});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.d < b.d; });

  obs.neighbors.assign(static_cast<std::size_t>(k), NeighborSlot{});
  for (std::size_t s = 0; s < obs.neighbors.size() && s < cands.size(); ++s) {
    obs.neighbors[s] = {std::min(1.0, cands[s].d / sense_range), bearing(neighbor_positions[cands[s].idx]), 1.0};
  }
  return obs;
}

struct PolicyOutput {
  ControlInput mean;
  std::array<double, 2> std{0.0, 0.0};
};

enum class Activation { tanh, relu, linear };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
  }
  return "?";
}

struct DenseLayer {
  int rows{0};  // input width
  int cols{0};  // output width
  std::vector<double> w;  // row-major rows x cols; y = x W + b
  std::vector<double> b;
  Activation act{Activation::linear};
};

struct PolicyWeights {
  static constexpr int kFormatVersion = 1;

  int format_version{kFormatVersion};
  int k_neighbors{8};
  double sense_range{10.0};
  std::array<double, 2> action_low{-1.0, -2.0};
  std::array<double, 2> action_high{1.0, 2.0};
  std::array<double, 2> log_std{0.0, 0.0};
  std::vector<DenseLayer> layers;

  /// Throws std::invalid_argument describing the first structural problem.
  void validate() const {
    if (format_version != kFormatVersion)
      throw std::invalid_argument("weights: unsupported format_version " + std::to_string(format_version) +
                                  " (expected " + std::to_string(kFormatVersion) + ")");
    if (k_neighbors < 0) throw std::invalid_argument("weights: k_neighbors must be >= 0");
    if (!(sense_range > 0.0)) throw std::invalid_argument("weights: sense_range must be positive");
    for (int i = 0; i < 2; ++i)
      if (!(action_low[i] < action_high[i]))
        throw std::invalid_argument("weights: action_low[" + std::to_string(i) + "] must be below action_high");
    if (layers.empty()) throw std::invalid_argument("weights: at least one layer is required");
    const auto in = static_cast<int>(observation_dim(k_neighbors));
    if (layers.front().rows != in)
      throw std::invalid_argument("weights: layer 0 expects " + std::to_string(layers.front().rows) +
                                  " inputs but k_neighbors=" + std::to_string(k_neighbors) + " gives " +
                                  std::to_string(in));
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      const std::string tag = "weights: layer " + std::to_string(i);
      if (l.rows <= 0 || l.cols <= 0) throw std::invalid_argument(tag + " has non-positive shape");
      if (l.w.size() != static_cast<std::size_t>(l.rows) * static_cast<std::size_t>(l.cols))
        throw std::invalid_argument(tag + ": w has " + std::to_string(l.w.size()) + " entries, expected rows*cols=" +
                                    std::to_string(l.rows * l.cols));
      if (l.b.size() != static_cast<std::size_t>(l.cols))
        throw std::invalid_argument(tag + ": b has " + std::to_string(l.b.size()) + " entries, expected cols=" +
                                    std::to_string(l.cols));
      if (i + 1 < layers.size() && layers[i + 1].rows != l.cols)
        throw std::invalid_argument(tag + " outputs " + std::to_string(l.cols) + " values but layer " +
                                    std::to_string(i + 1) + " expects " + std::to_string(layers[i + 1].rows));
    }
    if (layers.back().cols != 2) throw std::invalid_argument("weights: final layer must output 2 values");
  }
};

inline PolicyOutput mlp_infer(const PolicyWeights& pw, const Observation& obs) {
  std::vector<double> x = obs.flatten();
  if (x.size() != static_cast<std::size_t>(pw.layers.front().rows))
    throw std::invalid_argument("mlp_infer: observation width does not match the first layer");
  std::vector<double> y;
  for (const auto& l : pw.layers) {
    y.assign(l.b.begin(), l.b.end());
    for (int i = 0; i < l.rows; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      if (xi == 0.0) continue;
      const double* row = &l.w[static_cast<std::size_t>(i) * static_cast<std::size_t>(l.cols)];
      for (int j = 0; j < l.cols; ++j) y[static_cast<std::size_t>(j)] += xi * row[j];
    }
    for (auto& v : y) {
      if (l.act == Activation::tanh) v = std::tanh(v);
      else if (l.act == Activation::relu) v = std::max(0.0, v);
    }
    x.swap(y);
  }
  PolicyOutput out;
  for (int k = 0; k < 2; ++k) {
    const double lo = pw.action_low[static_cast<std::size_t>(k)];
    const double hi = pw.action_high[static_cast<std::size_t>(k)];
    out.mean[k] = lo + (std::tanh(x[static_cast<std::size_t>(k)]) + 1.0) * 0.5 * (hi - lo);
    out.std[static_cast<std::size_t>(k)] =
        std::max(1e-3, std::exp(pw.log_std[static_cast<std::size_t>(k)]) * (hi - lo) * 0.5);
  }
  return out;
}

/// Scripted go-to-goal steering with a fixed sidestep away from a close
/// neighbour. Needs no weights.
inline PolicyOutput proxy_policy(const Observation& obs, const ControlBounds& bounds, double sense_range) {
  double bearing = obs.goal_angle * std::numbers::pi;
  const NeighborSlot* nearest = nullptr;
  for (const auto& s : obs.neighbors) {
    if (s.present > 0.5 && (nearest == nullptr || s.dist < nearest->dist)) nearest = &s;
  }
  if (nearest != nullptr && nearest->dist < 0.15) bearing += nearest->angle > 0.0 ? -std::numbers::pi / 3.0 : std::numbers::pi / 3.0;

  PolicyOutput out;
  out.mean.w = std::clamp(2.5 * bearing, bounds.w_min, bounds.w_max);
  const double v = bounds.v_max * std::max(0.0, std::cos(bearing)) * std::min(1.0, obs.goal_dist * sense_range / 1.0);
  out.mean.v = std::clamp(v, bounds.v_min, bounds.v_max);
  out.std = {0.15 * (bounds.v_max - bounds.v_min) / 2.0, 0.15 * (bounds.w_max - bounds.w_min) / 2.0};
  return out;
}

/// Common interface for guidance branches.
class GuidancePolicy {
 public:
  virtual ~GuidancePolicy() = default;
  virtual PolicyOutput act(const Observation& obs) const = 0;
  virtual int k_neighbors() const = 0;
  virtual double sense_range() const = 0;
};

class ProxyPolicy final : public GuidancePolicy {
 public:
  explicit ProxyPolicy(ControlBounds bounds, int k = 8, double sense_range = 10.0)
      : bounds_(bounds), k_(k), range_(sense_range) {}

  PolicyOutput act(const Observation& obs) const override { return proxy_policy(obs, bounds_, range_); }
  int k_neighbors() const override { return k_; }
  double sense_range() const override { return range_; }

 private:
  ControlBounds bounds_;
  int k_;
  double range_;
};

class MlpPolicy final : public GuidancePolicy {
 public:
  explicit MlpPolicy(PolicyWeights w) : w_(std::move(w)) { w_.validate(); }

  PolicyOutput act(const Observation& obs) const override { return mlp_infer(w_, obs); }
  int k_neighbors() const override { return w_.k_neighbors; }
  double sense_range() const override { return w_.sense_range; }
  const PolicyWeights& weights() const { return w_; }

 private:
  PolicyWeights w_;
};

// ---------------------------------------------------------------------------
// Weights file (JSON)

namespace detail {

inline double round_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

template <typename T>
T require(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw std::invalid_argument(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(where + ": field '" + key + "' has the wrong type");
  }
}

inline std::array<double, 2> require_pair(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto v = require<std::vector<double>>(j, key, where);
  if (v.size() != 2) throw std::invalid_argument(where + ": field '" + key + "' must have exactly 2 numbers");
  return {v[0], v[1]};
}

}  // namespace detail

inline nlohmann::json weights_to_json(const PolicyWeights& w) {
  using detail::round_sig9;
  nlohmann::json j;
  j["format_version"] = w.format_version;
  j["k_neighbors"] = w.k_neighbors;
  j["sense_range"] = round_sig9(w.sense_range);
  j["action_low"] = {round_sig9(w.action_low[0]), round_sig9(w.action_low[1])};
  j["action_high"] = {round_sig9(w.action_high[0]), round_sig9(w.action_high[1])};
  j["log_std"] = {round_sig9(w.log_std[0]), round_sig9(w.log_std[1])};
  j["layers"] = nlohmann::json::array();
  for (const auto& l : w.layers) {
    nlohmann::json jl;
    jl["rows"] = l.rows;
    jl["cols"] = l.cols;
    std::vector<double> wr(l.w.size()), br(l.b.size());
    std::transform(l.w.begin(), l.w.end(), wr.begin(), round_sig9);
    std::transform(l.b.begin(), l.b.end(), br.begin(), round_sig9);
    jl["w"] = wr;
    jl["b"] = br;
    jl["act"] = to_string(l.act);
    j["layers"].push_back(jl);
  }
  return j;
}

inline PolicyWeights weights_from_json(const nlohmann::json& j) {
  using detail::require;
  const std::string where = "weights";
  if (!j.is_object()) throw std::invalid_argument("weights: document must be an object");
  PolicyWeights w;
  w.format_version = require<int>(j, "format_version", where);
  if (w.format_version != PolicyWeights::kFormatVersion)
    throw std::invalid_argument("weights: unsupported format_version " + std::to_string(w.format_version));
  w.k_neighbors = require<int>(j, "k_neighbors", where);
  w.sense_range = require<double>(j, "sense_range", where);
  w.action_low = detail::require_pair(j, "action_low", where);
  w.action_high = detail::require_pair(j, "action_high", where);
  w.log_std = detail::require_pair(j, "log_std", where);
  if (!j.contains("layers") || !j["layers"].is_array())
    throw std::invalid_argument("weights: missing field 'layers' (array)");
  for (std::size_t i = 0; i < j["layers"].size(); ++i) {
    const auto& jl = j["layers"][i];
    const std::string lw = "weights: layer " + std::to_string(i);
    DenseLayer l;
    l.rows = require<int>(jl, "rows", lw);
    l.cols = require<int>(jl, "cols", lw);
    l.w = require<std::vector<double>>(jl, "w", lw);
    l.b = require<std::vector<double>>(jl, "b", lw);
    const auto act = require<std::string>(jl, "act", lw);
    if (act == "tanh") l.act = Activation::tanh;
    else if (act == "relu") l.act = Activation::relu;
    else if (act == "linear") l.act = Activation::linear;
    else throw std::invalid_argument(lw + ": unknown activation '" + act + "' (expected tanh, relu or linear)");
    w.layers.push_back(std::move(l));
  }
  w.validate();
  return w;
}

inline PolicyWeights load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("weights: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("weights: '" + path + "' is not valid JSON (" + e.what() + ")");
  }
  return weights_from_json(j);
}

inline void save_weights(const PolicyWeights& w, const std::string& path) {
  w.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("weights: cannot write '" + path + "'");
  out << weights_to_json(w).dump(1) << '\n';
}

}  // namespace corl
