#pragma once

#include <array>
#include <utility>

#include "hevrl/drivecycle.hpp"

namespace hevrl {

// Prius-like default parameters; every field is config-overridable.
struct VehicleParams {
  double mass_kg = 1500.0;
  double drag_coeff = 0.26;
  double frontal_area_m2 = 2.0;
  double rolling_resist = 0.01;
  double air_density_kgpm3 = 1.2;
  double driveline_eff = 0.92;
  double battery_capacity_ah = 6.5;
  double battery_voltage_v = 202.0;
  double engine_power_max_w = 56000.0;
  double engine_idle_fuel_gps = 0.15;
  double engine_eff = 0.36;
  double fuel_lhv_jpg = 43000.0;
  double motor_power_max_w = 50000.0;

  void validate() const;
};

// Time-varying SOC corridor: ramps B->H / B->L over [0, bl], plateaus, and
// ramps back to B over (br, ts]. Limits coincide with B at both ends.
struct SocEnvelope {
  double high = 0.7;
  double low = 0.5;
  double balance = 0.6;
  int bl = 0;
  int br = 0;
  int ts = 0;

  void validate() const;
};

SocEnvelope make_envelope(int ts, double balance, double high, double low, double bl_fraction,
                          double br_fraction);

double soc_upper_limit(const SocEnvelope& env, int t);
double soc_lower_limit(const SocEnvelope& env, int t);

// Distance from the corridor at step t; zero inside, linear outside. At most
// one of the two terms is nonzero.
double step_cost(double soc, const SocEnvelope& env, int t);

// Longitudinal road-load power at the battery/engine node:
// (m a v + 0.5 rho Cd A v^3 + m g Cr v) / driveline_eff. Negative while braking.
double demand_power(const VehicleParams& p, double v_mps, double a_mps2);

// Willans-line fuel model; exactly zero at zero power (engine off).
double fuel_rate(const VehicleParams& p, double engine_power_w);

struct EnvState {
  int t = 0;
  double soc = 0.0;
  double velocity_mps = 0.0;
  double fuel_g_cum = 0.0;
};

// Normalized {SOC, velocity} pair exposed to the policy; the attack surface.
struct Observation {
  double soc = 0.0;       // SOC fraction, already in [0,1]
  double velocity = 0.0;  // velocity / velocity_norm_mps

  std::array<double, 2> as_array() const { return {soc, velocity}; }
};

struct Transition {
  Observation s;
  double action = 0.0;  // normalized engine power in [0,1]
  Observation s_next;
  double reward = 0.0;  // -grams of fuel, <= 0
  double cost = 0.0;    // SOC corridor violation, >= 0
  bool done = false;
};

// Quasi-static HEV environment following a drive cycle. step() is a pure
// function of (state, action); run independent copies concurrently at will.
class Environment {
 public:
  Environment(DriveCycle cycle, VehicleParams vehicle, SocEnvelope envelope,
              double velocity_norm_mps = 34.0);

  EnvState reset() const { return reset(envelope_.balance); }
  EnvState reset(double initial_soc) const;

  std::pair<EnvState, Transition> step(const EnvState& state, double action) const;

  Observation observe(const EnvState& state) const;

  int num_steps() const { return cycle_.num_steps(); }
  const DriveCycle& cycle() const { return cycle_; }
  const VehicleParams& vehicle() const { return vehicle_; }
  const SocEnvelope& envelope() const { return envelope_; }
  double velocity_norm() const { return velocity_norm_mps_; }

 private:
  DriveCycle cycle_;
  VehicleParams vehicle_;
  SocEnvelope envelope_;
  double velocity_norm_mps_;
};

}  // namespace hevrl
