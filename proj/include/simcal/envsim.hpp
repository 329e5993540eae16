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
//
// Deterministic 2D toy environments with a named, bounded parameter registry.
//
// Two scenes ship:
//  * air-hockey-2d: a velocity-servoed pusher strikes puck1 into puck2 on a
//    damped, friction-limited table. Observed state: both puck positions.
//  * bouncing-ball-2d: a ball dropped from a commanded height bounces off
//    two inclined plates under gravity and drag. Observed state: ball
//    position.
//
// Dynamics are intentionally simple closed forms: exponential velocity decay
// with rate damping/mass, Coulomb sliding friction, restitution impulses for
// circle contacts, and normal-velocity reflection for static surfaces with
// e = exp(0.05 * damping). Registry entries that the engine never reads are
// flagged non-causal; perturbing them cannot change a trajectory bit.

#ifndef SIMCAL_ENVSIM_HPP_
#define SIMCAL_ENVSIM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "simcal/error.hpp"

namespace simcal::env {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct ParamSpec {
  std::string name;  // object@param_type@param
  double min = 0.0;
  double max = 1.0;
  double def = 0.0;
  bool causal = false;  // true iff the engine reads it into the dynamics
};

struct ParamRegistry {
  std::string env_name;
  std::vector<ParamSpec> specs;
  std::vector<std::string> factor_names;
  int k = 0;
  int action_dim = 0;
  int horizon = 0;
  double dt = 0.0;
  std::vector<double> action_low;
  std::vector<double> action_high;

  int size() const { return static_cast<int>(specs.size()); }
  int index_of(const std::string& name) const;  // -1 when absent
  int require(const std::string& name) const;   // throws ConfigError
};

// Values aligned with registry order, in raw units.
using EnvParamVector = std::vector<double>;

struct Action {
  std::vector<double> v;
};

struct FactorizedTrajectory {
  // factors[k][t], t = 0..T
  std::vector<std::vector<Vec2>> factors;
  Action action;
  uint64_t seed = 0;
};

enum class Realism { kNominal, kReal };

ParamRegistry default_registry(const std::string& env_name);
EnvParamVector default_params(const ParamRegistry& reg);
EnvParamVector target_params(const std::string& env_name);

std::vector<double> normalize_params(const ParamRegistry& reg,
                                     const EnvParamVector& eps);
EnvParamVector denormalize_params(const ParamRegistry& reg,
                                  const std::vector<double>& unit);
// Throws DomainError listing the first violating entry.
void validate_params(const ParamRegistry& reg, const EnvParamVector& eps);
void validate_action(const ParamRegistry& reg, const Action& a);

// --- low-level stepping state, exposed for direct physics tests ------------

struct Body {
  Vec2 p;
  Vec2 v;
  double radius = 0.0;
  double mass = 1.0;
  double damping = 0.0;      // decay exponent is damping / mass
  double friction = 0.0;     // sliding friction coefficient, 0 disables
  double restitution = 1.0;  // body-body contacts use the product
  bool frozen = false;       // excluded from dynamics and contacts
  bool servo = false;        // velocity owned by the controller this phase
};

// Axis-aligned boundary. dir = +1: bodies must stay at coord <= pos;
// dir = -1: bodies must stay at coord >= pos.
struct Wall {
  int axis = 0;  // 0 = x, 1 = y
  double pos = 0.0;
  int dir = +1;
  double restitution = 1.0;
};

// Static line segment (inclined plate): center +/- half_len * tangent.
struct Plate {
  Vec2 center;
  Vec2 normal;   // unit
  double half_len = 0.0;
  double restitution = 1.0;
};

struct SimState {
  std::vector<Body> bodies;
  std::vector<Wall> walls;
  std::vector<Plate> plates;
  bool gravity = false;
  bool floor = false;
  double floor_y = 0.0;
};

constexpr double kGravity = 9.81;
constexpr double kStopSpeed = 1e-4;
constexpr int kSubsteps = 4;

// One integration substep: (gravity,) exponential drag, sliding friction,
// stop rule, position update. Servoed and frozen bodies keep their velocity.
void integrate_step(SimState& s, double dt_sub);

struct Contact {
  int a = -1;  // body index
  int b = -1;  // body index, or -1 for a static contact
};

// Impulse resolution for body-body, wall, plate and floor contacts; returns
// the contacts that applied an impulse this call, in resolution order.
std::vector<Contact> resolve_collisions(SimState& s);

// Full rollout under fixed parameters. kReal additionally applies i.i.d.
// Gaussian observation noise with the given sigma (0 disables).
FactorizedTrajectory rollout(const ParamRegistry& reg, const EnvParamVector& eps,
                             const Action& action, uint64_t seed,
                             Realism realism, double obs_noise_sigma = 0.0);

Action scripted_policy_sample(const ParamRegistry& reg, uint64_t seed);

// Eq-style factorized metric: per factor, the sum over timesteps of the
// Euclidean distance between paired positions.
std::vector<double> trajectory_difference(const FactorizedTrajectory& sim,
                                          const FactorizedTrajectory& real);

}  // namespace simcal::env

#endif  // SIMCAL_ENVSIM_HPP_
