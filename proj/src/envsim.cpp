// Copyright 2026 The simcal Authors
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

#include "simcal/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "simcal/rng.hpp"

namespace simcal::env {

namespace {

// air hockey scene constants
constexpr double kPuckRadius = 0.0255;
constexpr double kPusherRadius = 0.03;
constexpr double kPusherMass = 100.0;
constexpr double kPuckMass = 1.0;
constexpr double kTableHalfX = 0.45;
constexpr double kTableHalfY = 0.9;
constexpr Vec2 kPuck1Start{-0.15, 0.0};
constexpr Vec2 kPuck2Start{-0.075, -0.075};

// bouncing ball scene constants
constexpr double kBallRadius = 0.034;
constexpr double kDropX = -0.02;
constexpr double kInvSqrt2 = 0.70710678118654752440;

double wall_restitution(double damping) { return std::exp(0.05 * damping); }

ParamSpec p(std::string name, double mn, double mx, double def, bool causal) {
  return ParamSpec{std::move(name), mn, mx, def, causal};
}

std::vector<ParamSpec> air_hockey_specs() {
  std::vector<ParamSpec> s;
  const bool A = true, I = false;
  // pusher
  s.push_back(p("pusher@actuation@vel_discount", 0.5, 1.0, 0.75, A));
  s.push_back(p("pusher@dyna@damping", -14.0, -5.0, -10.0, A));
  s.push_back(p("pusher@dyna@friction_sliding", 0.0, 0.12, 0.05, I));
  s.push_back(p("pusher@dyna@friction_torsional", 0.0, 0.05, 0.01, I));
  s.push_back(p("pusher@dyna@friction_rolling", 0.0, 0.05, 0.01, I));
  s.push_back(p("pusher@dyna@armature", 0.0, 0.02, 0.005, I));
  s.push_back(p("pusher@geom@radius", 0.02, 0.04, 0.03, I));
  s.push_back(p("pusher@visual@reflectance", 0.0, 1.0, 0.5, I));
  // puck1
  s.push_back(p("puck1@dyna@damping", -14.0, -5.0, -10.0, A));
  s.push_back(p("puck1@dyna@friction_sliding", 0.0, 0.25, 0.05, A));
  s.push_back(p("puck1@dyna@restitution", 0.5, 1.0, 1.0, A));
  s.push_back(p("puck1@dyna@friction_torsional", 0.0, 0.05, 0.01, I));
  s.push_back(p("puck1@dyna@friction_rolling", 0.0, 0.05, 0.01, I));
  s.push_back(p("puck1@dyna@armature", 0.0, 0.02, 0.005, I));
  s.push_back(p("puck1@geom@radius", 0.02, 0.03, 0.0255, I));
  s.push_back(p("puck1@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("puck1@visual@shininess", 0.0, 1.0, 0.3, I));
  // puck2
  s.push_back(p("puck2@dyna@damping", -14.0, -5.0, -10.0, A));
  s.push_back(p("puck2@dyna@friction_sliding", 0.0, 0.25, 0.05, A));
  s.push_back(p("puck2@dyna@restitution", 0.5, 1.0, 1.0, A));
  s.push_back(p("puck2@dyna@friction_torsional", 0.0, 0.05, 0.01, I));
  s.push_back(p("puck2@dyna@friction_rolling", 0.0, 0.05, 0.01, I));
  s.push_back(p("puck2@dyna@armature", 0.0, 0.02, 0.005, I));
  s.push_back(p("puck2@geom@radius", 0.02, 0.03, 0.0255, I));
  s.push_back(p("puck2@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("puck2@visual@shininess", 0.0, 1.0, 0.3, I));
  // sensing
  s.push_back(p("env@camera@bias_x", -0.05, 0.05, 0.0, A));
  s.push_back(p("env@camera@bias_y", -0.05, 0.05, 0.0, A));
  s.push_back(p("env@camera@height", 0.5, 2.0, 1.2, I));
  s.push_back(p("env@camera@fov", 40.0, 90.0, 60.0, I));
  s.push_back(p("env@light@intensity", 0.0, 1.0, 0.8, I));
  s.push_back(p("env@light@azimuth", -3.14, 3.14, 0.0, I));
  s.push_back(p("env@air@density", 0.8, 1.4, 1.2, I));
  // walls; never contacted inside the reachable zone
  for (const char* w : {"left_wall", "right_wall", "front_wall", "back_wall"}) {
    s.push_back(p(std::string(w) + "@dyna@damping", -14.0, -5.0, -10.0, I));
  }
  for (const char* w : {"left_wall", "right_wall", "front_wall", "back_wall"}) {
    s.push_back(p(std::string(w) + "@dyna@restitution", 0.5, 1.0, 0.8, I));
  }
  for (const char* w : {"left_wall", "right_wall", "front_wall", "back_wall"}) {
    s.push_back(p(std::string(w) + "@dyna@friction_sliding", 0.0, 0.2, 0.1, I));
  }
  // obstacle and dressing
  s.push_back(p("obstacle@dyna@damping", -14.0, -5.0, -10.0, I));
  s.push_back(p("obstacle@dyna@restitution", 0.5, 1.0, 0.8, I));
  s.push_back(p("obstacle@dyna@friction_sliding", 0.0, 0.2, 0.1, I));
  s.push_back(p("obstacle@dyna@mass", 0.5, 10.0, 2.0, I));
  s.push_back(p("obstacle@geom@half_extent_x", 0.01, 0.05, 0.025, I));
  s.push_back(p("obstacle@geom@half_extent_y", 0.1, 0.25, 0.18, I));
  s.push_back(p("obstacle@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("table@dyna@mass", 10.0, 100.0, 40.0, I));
  s.push_back(p("table@dyna@friction_sliding", 0.0, 0.2, 0.1, I));
  s.push_back(p("table@geom@half_extent_x", 0.3, 0.6, 0.45, I));
  s.push_back(p("table@geom@half_extent_y", 0.6, 1.2, 0.9, I));
  s.push_back(p("table@geom@height", 0.5, 1.0, 0.8, I));
  s.push_back(p("table@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("goal@dyna@mass", 0.1, 5.0, 1.0, I));
  s.push_back(p("goal@geom@radius", 0.1, 0.2, 0.15, I));
  s.push_back(p("goal@geom@pos_x", 0.3, 0.5, 0.43, I));
  s.push_back(p("goal@geom@pos_y", -0.1, 0.1, 0.0, I));
  s.push_back(p("goal@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("env@air@fan_speed", 0.5, 1.5, 1.0, I));
  return s;
}

std::vector<ParamSpec> bouncing_ball_specs() {
  std::vector<ParamSpec> s;
  const bool A = true, I = false;
  s.push_back(p("ball@dyna@damping", -14.0, -5.0, -10.0, A));
  s.push_back(p("ball@dyna@mass", 0.5, 2.0, 1.0, A));
  s.push_back(p("plate1@dyna@damping", -14.0, -5.0, -10.0, A));
  s.push_back(p("plate2@dyna@damping", -14.0, -5.0, -10.0, A));
  // ball dressing
  s.push_back(p("ball@dyna@friction_sliding", 0.0, 0.2, 0.05, I));
  s.push_back(p("ball@dyna@friction_torsional", 0.0, 0.05, 0.01, I));
  s.push_back(p("ball@dyna@friction_rolling", 0.0, 0.05, 0.01, I));
  s.push_back(p("ball@dyna@restitution", 0.5, 1.0, 0.8, I));
  s.push_back(p("ball@dyna@armature", 0.0, 0.02, 0.005, I));
  s.push_back(p("ball@dyna@spin_damping", -5.0, 0.0, -1.0, I));
  s.push_back(p("ball@dyna@magnus_gain", 0.0, 0.5, 0.1, I));
  s.push_back(p("ball@geom@radius", 0.02, 0.05, 0.034, I));
  s.push_back(p("ball@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("ball@visual@shininess", 0.0, 1.0, 0.3, I));
  s.push_back(p("ball@visual@color_hue", 0.0, 360.0, 20.0, I));
  s.push_back(p("ball@visual@pattern_angle", -3.14, 3.14, 0.0, I));
  for (const char* pl : {"plate1", "plate2"}) {
    const std::string b(pl);
    s.push_back(p(b + "@dyna@friction_sliding", 0.0, 0.2, 0.1, I));
    s.push_back(p(b + "@dyna@friction_torsional", 0.0, 0.05, 0.01, I));
    s.push_back(p(b + "@dyna@restitution", 0.5, 1.0, 0.8, I));
    s.push_back(p(b + "@dyna@mass", 0.1, 5.0, 1.0, I));
    s.push_back(p(b + "@dyna@armature", 0.0, 0.02, 0.005, I));
    s.push_back(p(b + "@geom@half_length", 0.05, 0.2, b == "plate1" ? 0.09 : 0.11, I));
    s.push_back(p(b + "@geom@thickness", 0.005, 0.03, 0.01, I));
    s.push_back(p(b + "@geom@pos_x", -0.5, 0.5, b == "plate1" ? 0.0 : 0.09, I));
    s.push_back(p(b + "@geom@pos_y", 0.0, 1.0, b == "plate1" ? 0.55 : 0.25, I));
    s.push_back(p(b + "@geom@angle", -1.571, 1.571, b == "plate1" ? 0.785 : -0.785, I));
    s.push_back(p(b + "@visual@reflectance", 0.0, 1.0, 0.5, I));
    s.push_back(p(b + "@visual@shininess", 0.0, 1.0, 0.3, I));
  }
  s.push_back(p("stand@dyna@mass", 1.0, 50.0, 10.0, I));
  s.push_back(p("stand@dyna@damping", -14.0, -5.0, -10.0, I));
  s.push_back(p("stand@dyna@friction_sliding", 0.0, 0.2, 0.1, I));
  s.push_back(p("stand@dyna@restitution", 0.5, 1.0, 0.8, I));
  s.push_back(p("stand@geom@height", 0.5, 2.0, 1.4, I));
  s.push_back(p("stand@geom@pos_x", -0.5, 0.5, -0.1, I));
  s.push_back(p("stand@geom@width", 0.01, 0.2, 0.05, I));
  s.push_back(p("stand@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("basket@dyna@mass", 0.1, 5.0, 0.5, I));
  s.push_back(p("basket@dyna@damping", -14.0, -5.0, -10.0, I));
  s.push_back(p("basket@dyna@restitution", 0.5, 1.0, 0.8, I));
  s.push_back(p("basket@dyna@friction_sliding", 0.0, 0.2, 0.1, I));
  s.push_back(p("basket@geom@radius", 0.05, 0.1, 0.065, I));
  s.push_back(p("basket@geom@pos_x", -0.5, 0.5, 0.0, I));
  s.push_back(p("basket@geom@pos_y", 0.0, 0.5, 0.05, I));
  s.push_back(p("basket@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("floor@dyna@damping", -14.0, -5.0, -10.0, I));
  s.push_back(p("floor@dyna@friction_sliding", 0.0, 0.3, 0.2, I));
  s.push_back(p("floor@dyna@restitution", 0.0, 0.8, 0.3, I));
  s.push_back(p("floor@dyna@friction_torsional", 0.0, 0.05, 0.01, I));
  s.push_back(p("floor@geom@pos_y", -0.1, 0.1, 0.0, I));
  s.push_back(p("floor@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("floor@visual@shininess", 0.0, 1.0, 0.3, I));
  s.push_back(p("table@dyna@mass", 10.0, 100.0, 40.0, I));
  s.push_back(p("table@dyna@damping", -14.0, -5.0, -10.0, I));
  s.push_back(p("table@dyna@friction_sliding", 0.0, 0.2, 0.1, I));
  s.push_back(p("table@dyna@restitution", 0.5, 1.0, 0.8, I));
  s.push_back(p("table@geom@half_extent_x", 0.3, 0.6, 0.45, I));
  s.push_back(p("table@geom@half_extent_y", 0.6, 1.2, 0.9, I));
  s.push_back(p("table@geom@height", 0.5, 1.0, 0.8, I));
  s.push_back(p("table@visual@reflectance", 0.0, 1.0, 0.5, I));
  s.push_back(p("env@light@intensity", 0.0, 1.0, 0.8, I));
  s.push_back(p("env@light@azimuth", -3.14, 3.14, 0.0, I));
  s.push_back(p("env@light@elevation", 0.0, 1.571, 0.8, I));
  s.push_back(p("env@air@density", 0.8, 1.4, 1.2, I));
  s.push_back(p("env@air@viscosity", 0.5, 2.0, 1.0, I));
  s.push_back(p("env@air@temperature", 10.0, 40.0, 22.0, I));
  s.push_back(p("env@camera@height", 0.5, 2.0, 1.2, I));
  s.push_back(p("env@camera@fov", 40.0, 90.0, 60.0, I));
  s.push_back(p("env@camera@exposure", 0.1, 2.0, 1.0, I));
  s.push_back(p("env@camera@pos_x", -1.0, 1.0, 0.0, I));
  s.push_back(p("env@camera@pos_y", -1.0, 1.0, 0.0, I));
  return s;
}

}  // namespace

int ParamRegistry::index_of(const std::string& name) const {
  for (size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int ParamRegistry::require(const std::string& name) const {
  const int i = index_of(name);
  if (i < 0) throw ConfigError("registry has no parameter '" + name + "'");
  return i;
}

ParamRegistry default_registry(const std::string& env_name) {
  ParamRegistry reg;
  reg.env_name = env_name;
  if (env_name == "air-hockey-2d") {
    reg.specs = air_hockey_specs();
    reg.factor_names = {"puck1", "puck2"};
    reg.k = 2;
    reg.action_dim = 4;
    reg.horizon = 50;
    reg.dt = 0.05;
    reg.action_low = {-0.24, 0.065, -0.157, 0.3};
    reg.action_high = {-0.21, 0.085, 0.157, 0.5};
    if (reg.size() != 64) throw ContractError("air-hockey registry size drifted");
  } else if (env_name == "bouncing-ball-2d") {
    reg.specs = bouncing_ball_specs();
    reg.factor_names = {"ball"};
    reg.k = 1;
    reg.action_dim = 1;
    reg.horizon = 50;
    reg.dt = 0.05;
    reg.action_low = {0.9};
    reg.action_high = {1.3};
    if (reg.size() != 82) throw ContractError("bouncing-ball registry size drifted");
  } else {
    throw ConfigError("unknown environment '" + env_name +
                      "' (expected air-hockey-2d or bouncing-ball-2d)");
  }
  return reg;
}

EnvParamVector default_params(const ParamRegistry& reg) {
  EnvParamVector eps(reg.size());
  for (int i = 0; i < reg.size(); ++i) eps[i] = reg.specs[i].def;
  return eps;
}

EnvParamVector target_params(const std::string& env_name) {
  const ParamRegistry reg = default_registry(env_name);
  EnvParamVector eps = default_params(reg);
  auto set = [&](const std::string& name, double v) { eps[reg.require(name)] = v; };
  if (env_name == "air-hockey-2d") {
    set("pusher@actuation@vel_discount", 0.85);
    set("pusher@dyna@damping", -6.0);
    set("puck1@dyna@damping", -6.0);
    set("puck2@dyna@damping", -6.0);
    set("puck1@dyna@friction_sliding", 0.04);
    set("puck2@dyna@friction_sliding", 0.03);
    set("env@camera@bias_x", 0.03);
    set("env@camera@bias_y", -0.02);
  } else {
    set("ball@dyna@damping", -11.0);
    set("ball@dyna@mass", 1.3);
    set("plate1@dyna@damping", -7.0);
    set("plate2@dyna@damping", -12.0);
  }
  return eps;
}

std::vector<double> normalize_params(const ParamRegistry& reg,
                                     const EnvParamVector& eps) {
  if (static_cast<int>(eps.size()) != reg.size()) {
    throw ShapeError("normalize_params: size mismatch");
  }
  std::vector<double> u(eps.size());
  for (int i = 0; i < reg.size(); ++i) {
    u[i] = (eps[i] - reg.specs[i].min) / (reg.specs[i].max - reg.specs[i].min);
  }
  return u;
}

EnvParamVector denormalize_params(const ParamRegistry& reg,
                                  const std::vector<double>& unit) {
  if (static_cast<int>(unit.size()) != reg.size()) {
    throw ShapeError("denormalize_params: size mismatch");
  }
  EnvParamVector eps(unit.size());
  for (int i = 0; i < reg.size(); ++i) {
    eps[i] = reg.specs[i].min + unit[i] * (reg.specs[i].max - reg.specs[i].min);
  }
  return eps;
}

void validate_params(const ParamRegistry& reg, const EnvParamVector& eps) {
  if (static_cast<int>(eps.size()) != reg.size()) {
    throw ShapeError("validate_params: expected " + std::to_string(reg.size()) +
                     " values, got " + std::to_string(eps.size()));
  }
  for (int i = 0; i < reg.size(); ++i) {
    const ParamSpec& s = reg.specs[i];
    if (!(eps[i] >= s.min && eps[i] <= s.max)) {
      throw DomainError("parameter '" + s.name + "' = " + std::to_string(eps[i]) +
                        " outside [" + std::to_string(s.min) + ", " +
                        std::to_string(s.max) + "]");
    }
  }
}

void validate_action(const ParamRegistry& reg, const Action& a) {
  if (static_cast<int>(a.v.size()) != reg.action_dim) {
    throw ShapeError("action width " + std::to_string(a.v.size()) +
                     " does not match environment width " +
                     std::to_string(reg.action_dim));
  }
  for (int i = 0; i < reg.action_dim; ++i) {
    if (!(a.v[i] >= reg.action_low[i] && a.v[i] <= reg.action_high[i])) {
      throw DomainError("action[" + std::to_string(i) + "] = " +
                        std::to_string(a.v[i]) + " outside [" +
                        std::to_string(reg.action_low[i]) + ", " +
                        std::to_string(reg.action_high[i]) + "]");
    }
  }
}

void integrate_step(SimState& s, double dt_sub) {
  if (dt_sub <= 0.0) throw ContractError("integrate_step: dt_sub must be positive");
  for (Body& b : s.bodies) {
    if (b.frozen) continue;
    if (!b.servo) {
      if (s.gravity) b.v.y += -kGravity * dt_sub;
      const double decay = std::exp((b.damping / b.mass) * dt_sub);
      b.v.x *= decay;
      b.v.y *= decay;
      if (b.friction > 0.0) {
        const double speed = std::sqrt(b.v.x * b.v.x + b.v.y * b.v.y);
        if (speed > 0.0) {
          const double reduced =
              std::max(0.0, speed - b.friction * kGravity * dt_sub);
          const double f = reduced / speed;
          b.v.x *= f;
          b.v.y *= f;
        }
      }
      const double sp = std::sqrt(b.v.x * b.v.x + b.v.y * b.v.y);
      if (sp < kStopSpeed) {
        b.v.x = 0.0;
        b.v.y = 0.0;
      }
    }
    b.p.x += b.v.x * dt_sub;
    b.p.y += b.v.y * dt_sub;
  }
}

std::vector<Contact> resolve_collisions(SimState& s) {
  std::vector<Contact> contacts;
  const int n = static_cast<int>(s.bodies.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Body& a = s.bodies[i];
      Body& b = s.bodies[j];
      if (a.frozen || b.frozen) continue;
      const double dx = b.p.x - a.p.x;
      const double dy = b.p.y - a.p.y;
      const double dist2 = dx * dx + dy * dy;
      const double rsum = a.radius + b.radius;
      if (dist2 >= rsum * rsum) continue;
      const double dist = std::sqrt(dist2);
      double nx = 1.0, ny = 0.0;
      if (dist > 0.0) {
        nx = dx / dist;
        ny = dy / dist;
      }
      const double relvn = (b.v.x - a.v.x) * nx + (b.v.y - a.v.y) * ny;
      const double inv_ma = 1.0 / a.mass;
      const double inv_mb = 1.0 / b.mass;
      if (relvn < 0.0) {
        const double e = a.restitution * b.restitution;
        const double jimp = -(1.0 + e) * relvn / (inv_ma + inv_mb);
        a.v.x -= jimp * inv_ma * nx;
        a.v.y -= jimp * inv_ma * ny;
        b.v.x += jimp * inv_mb * nx;
        b.v.y += jimp * inv_mb * ny;
        contacts.push_back({i, j});
      }
      const double push = rsum - dist;
      const double wa = inv_ma / (inv_ma + inv_mb);
      const double wb = inv_mb / (inv_ma + inv_mb);
      a.p.x -= push * wa * nx;
      a.p.y -= push * wa * ny;
      b.p.x += push * wb * nx;
      b.p.y += push * wb * ny;
    }
  }
  for (int i = 0; i < n; ++i) {
    Body& b = s.bodies[i];
    if (b.frozen) continue;
    for (const Wall& w : s.walls) {
      const double coord = (w.axis == 0) ? b.p.x : b.p.y;
      const double vel = (w.axis == 0) ? b.v.x : b.v.y;
      if (w.dir > 0) {
        if (coord + b.radius > w.pos && vel > 0.0) {
          double& pv = (w.axis == 0) ? b.v.x : b.v.y;
          double& pp = (w.axis == 0) ? b.p.x : b.p.y;
          pv = -w.restitution * pv;
          pp = w.pos - b.radius;
          contacts.push_back({i, -1});
        }
      } else {
        if (coord - b.radius < w.pos && vel < 0.0) {
          double& pv = (w.axis == 0) ? b.v.x : b.v.y;
          double& pp = (w.axis == 0) ? b.p.x : b.p.y;
          pv = -w.restitution * pv;
          pp = w.pos + b.radius;
          contacts.push_back({i, -1});
        }
      }
    }
    for (const Plate& pl : s.plates) {
      const double tx = pl.normal.y;  // tangent
      const double ty = -pl.normal.x;
      const double cx = b.p.x - pl.center.x;
      const double cy = b.p.y - pl.center.y;
      double t = cx * tx + cy * ty;
      t = std::clamp(t, -pl.half_len, pl.half_len);
      const double qx = pl.center.x + t * tx;
      const double qy = pl.center.y + t * ty;
      const double dx = b.p.x - qx;
      const double dy = b.p.y - qy;
      const double d2 = dx * dx + dy * dy;
      if (d2 >= b.radius * b.radius || d2 == 0.0) continue;
      const double d = std::sqrt(d2);
      const double nx = dx / d;
      const double ny = dy / d;
      const double vn = b.v.x * nx + b.v.y * ny;
      if (vn < 0.0) {
        b.v.x -= (1.0 + pl.restitution) * vn * nx;
        b.v.y -= (1.0 + pl.restitution) * vn * ny;
        contacts.push_back({i, -1});
      }
      b.p.x = qx + nx * b.radius;
      b.p.y = qy + ny * b.radius;
    }
    if (s.floor && b.p.y - b.radius < s.floor_y && b.v.y < 0.0) {
      // dead stop; the floor is not a tunable surface
      b.v.x = 0.0;
      b.v.y = 0.0;
      b.p.y = s.floor_y + b.radius;
      contacts.push_back({i, -1});
    }
  }
  return contacts;
}

namespace {

struct AirHockeyScene {
  SimState state;
  Vec2 strike_dir;
  double strike_speed = 0.0;
  double pusher_lag = 0.0;  // decay rate of the servo error
};

AirHockeyScene build_air_hockey(const ParamRegistry& reg,
                                const EnvParamVector& eps, const Action& a) {
  AirHockeyScene sc;
  auto val = [&](const char* name) { return eps[reg.require(name)]; };

  Body pusher;
  pusher.p = {a.v[0], a.v[1]};
  pusher.radius = kPusherRadius;
  pusher.mass = kPusherMass;
  pusher.damping = val("pusher@dyna@damping");
  pusher.friction = 0.0;
  pusher.restitution = 1.0;  // strike elasticity carried by the puck parameter
  pusher.servo = true;

  Body puck1;
  puck1.p = kPuck1Start;
  puck1.radius = kPuckRadius;
  puck1.mass = kPuckMass;
  puck1.damping = val("puck1@dyna@damping");
  puck1.friction = val("puck1@dyna@friction_sliding");
  puck1.restitution = val("puck1@dyna@restitution");

  Body puck2;
  puck2.p = kPuck2Start;
  puck2.radius = kPuckRadius;
  puck2.mass = kPuckMass;
  puck2.damping = val("puck2@dyna@damping");
  puck2.friction = val("puck2@dyna@friction_sliding");
  puck2.restitution = val("puck2@dyna@restitution");

  sc.state.bodies = {pusher, puck1, puck2};
  sc.state.walls = {
      {0, kTableHalfX, +1, wall_restitution(val("right_wall@dyna@damping"))},
      {0, -kTableHalfX, -1, wall_restitution(val("left_wall@dyna@damping"))},
      {1, kTableHalfY, +1, wall_restitution(val("front_wall@dyna@damping"))},
      {1, -kTableHalfY, -1, wall_restitution(val("back_wall@dyna@damping"))},
  };

  const double ax = kPuck1Start.x - a.v[0];
  const double ay = kPuck1Start.y - a.v[1];
  const double alen = std::sqrt(ax * ax + ay * ay);
  const double ca = std::cos(a.v[2]);
  const double sa = std::sin(a.v[2]);
  sc.strike_dir = {(ax * ca - ay * sa) / alen, (ax * sa + ay * ca) / alen};
  sc.strike_speed = a.v[3] * val("pusher@actuation@vel_discount");
  // Servo error decays at twice the body rate: fast enough that the strike
  // drives the full contact chain; the damping still marks the trajectory
  // through the contact timing and residual speed deficit.
  sc.pusher_lag = 2.0 * pusher.damping;
  return sc;
}

SimState build_bouncing_ball(const ParamRegistry& reg, const EnvParamVector& eps,
                             const Action& a) {
  SimState st;
  auto val = [&](const char* name) { return eps[reg.require(name)]; };
  Body ball;
  ball.p = {kDropX, a.v[0]};
  ball.radius = kBallRadius;
  ball.mass = val("ball@dyna@mass");
  ball.damping = val("ball@dyna@damping");
  ball.friction = 0.0;
  ball.restitution = 1.0;
  st.bodies = {ball};
  st.plates = {
      {{0.0, 0.55}, {kInvSqrt2, kInvSqrt2}, 0.09,
       wall_restitution(val("plate1@dyna@damping"))},
      {{0.09, 0.25}, {-kInvSqrt2, kInvSqrt2}, 0.11,
       wall_restitution(val("plate2@dyna@damping"))},
  };
  st.gravity = true;
  st.floor = true;
  st.floor_y = 0.0;
  return st;
}

}  // namespace

FactorizedTrajectory rollout(const ParamRegistry& reg, const EnvParamVector& eps,
                             const Action& action, uint64_t seed,
                             Realism realism, double obs_noise_sigma) {
  validate_params(reg, eps);
  validate_action(reg, action);

  const bool air_hockey = (reg.env_name == "air-hockey-2d");
  AirHockeyScene sc;
  SimState st;
  std::vector<int> observed;
  if (air_hockey) {
    sc = build_air_hockey(reg, eps, action);
    st = sc.state;
    observed = {1, 2};
  } else {
    st = build_bouncing_ball(reg, eps, action);
    observed = {0};
  }

  double bias_x = 0.0, bias_y = 0.0;
  {
    const int bx = reg.index_of("env@camera@bias_x");
    const int by = reg.index_of("env@camera@bias_y");
    if (bx >= 0) bias_x = eps[bx];
    if (by >= 0) bias_y = eps[by];
  }

  const double dt_sub = reg.dt / kSubsteps;
  const int t_total = reg.horizon;

  FactorizedTrajectory traj;
  traj.action = action;
  traj.seed = seed;
  traj.factors.assign(reg.k, std::vector<Vec2>());
  for (auto& f : traj.factors) f.reserve(t_total + 1);

  Rng noise(derive_seed(seed, "obs-noise"));
  const bool noisy = (realism == Realism::kReal) && obs_noise_sigma > 0.0;
  auto record = [&]() {
    for (int k = 0; k < reg.k; ++k) {
      const Body& b = st.bodies[observed[k]];
      Vec2 obs{b.p.x + bias_x, b.p.y + bias_y};
      if (noisy) {
        obs.x += obs_noise_sigma * noise.gaussian();
        obs.y += obs_noise_sigma * noise.gaussian();
      }
      traj.factors[k].push_back(obs);
    }
  };

  record();  // t = 0
  bool striking = air_hockey;
  double t_now = 0.0;
  for (int step = 0; step < t_total; ++step) {
    for (int sub = 0; sub < kSubsteps; ++sub) {
      t_now += dt_sub;
      if (striking) {
        // First-order actuation lag: the servo approaches the commanded
        // strike speed at the rate set by the pusher damping.
        const double v = sc.strike_speed * (1.0 - std::exp(sc.pusher_lag * t_now));
        st.bodies[0].v = {v * sc.strike_dir.x, v * sc.strike_dir.y};
      }
      integrate_step(st, dt_sub);
      const std::vector<Contact> contacts = resolve_collisions(st);
      if (striking) {
        for (const Contact& c : contacts) {
          if (c.a == 0 || c.b == 0) {
            // Strike delivered: the arm retracts the pusher.
            st.bodies[0].frozen = true;
            st.bodies[0].v = {0.0, 0.0};
            striking = false;
            break;
          }
        }
      }
    }
    record();
  }
  return traj;
}

Action scripted_policy_sample(const ParamRegistry& reg, uint64_t seed) {
  Rng rng(derive_seed(seed, "scripted-policy"));
  Action a;
  a.v.resize(reg.action_dim);
  for (int i = 0; i < reg.action_dim; ++i) {
    a.v[i] = rng.uniform(reg.action_low[i], reg.action_high[i]);
  }
  return a;
}

std::vector<double> trajectory_difference(const FactorizedTrajectory& sim,
                                          const FactorizedTrajectory& real) {
  if (sim.factors.size() != real.factors.size()) {
    throw ContractError("trajectory_difference: factor counts differ (" +
                        std::to_string(sim.factors.size()) + " vs " +
                        std::to_string(real.factors.size()) + ")");
  }
  std::vector<double> d(sim.factors.size(), 0.0);
  for (size_t k = 0; k < sim.factors.size(); ++k) {
    if (sim.factors[k].size() != real.factors[k].size()) {
      throw ContractError("trajectory_difference: horizon mismatch on factor " +
                          std::to_string(k));
    }
    double acc = 0.0;
    for (size_t t = 0; t < sim.factors[k].size(); ++t) {
      const double dx = sim.factors[k][t].x - real.factors[k][t].x;
      const double dy = sim.factors[k][t].y - real.factors[k][t].y;
      acc += std::sqrt(dx * dx + dy * dy);
    }
    d[k] = acc;
  }
  return d;
}

}  // namespace simcal::env
