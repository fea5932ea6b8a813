#include "hevrl/powertrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hevrl {

namespace {
constexpr double kGravity = 9.81;
}

void VehicleParams::validate() const {
  const double fields[] = {mass_kg,           drag_coeff,        frontal_area_m2,
                           rolling_resist,    air_density_kgpm3, driveline_eff,
                           battery_capacity_ah, battery_voltage_v, engine_power_max_w,
                           engine_idle_fuel_gps, engine_eff,      fuel_lhv_jpg,
                           motor_power_max_w};
  for (double f : fields) {
    if (!(f > 0.0)) throw std::invalid_argument("vehicle parameters must be strictly positive");
  }
  if (driveline_eff > 1.0 || engine_eff > 1.0) {
    throw std::invalid_argument("efficiencies must be in (0,1]");
  }
}

void SocEnvelope::validate() const {
  if (!(0.0 < low && low < balance && balance < high && high < 1.0)) {
    throw std::invalid_argument("SOC envelope needs 0 < L < B < H < 1");
  }
  if (!(0 < bl && bl < br && br < ts)) {
    throw std::invalid_argument("SOC envelope needs 0 < bl < br < ts");
  }
}

SocEnvelope make_envelope(int ts, double balance, double high, double low, double bl_fraction,
                          double br_fraction) {
  SocEnvelope env;
  env.balance = balance;
  env.high = high;
  env.low = low;
  env.ts = ts;
  env.bl = static_cast<int>(std::ceil(bl_fraction * ts));
  env.br = static_cast<int>(std::floor(br_fraction * ts));
  env.validate();
  return env;
}

namespace {
double limit_at(const SocEnvelope& env, int t, double extreme) {
  if (t < 0 || t > env.ts) throw std::out_of_range("envelope step index out of range");
  if (t <= env.bl) {
    return (extreme - env.balance) / env.bl * t + env.balance;
  }
  if (t > env.br) {
    return (extreme - env.balance) / (env.br - env.ts) * (t - env.ts) + env.balance;
  }
  return extreme;
}
}  // namespace

double soc_upper_limit(const SocEnvelope& env, int t) { return limit_at(env, t, env.high); }

double soc_lower_limit(const SocEnvelope& env, int t) { return limit_at(env, t, env.low); }

double step_cost(double soc, const SocEnvelope& env, int t) {
  return std::max(soc - soc_upper_limit(env, t), 0.0) +
         std::max(soc_lower_limit(env, t) - soc, 0.0);
}

double demand_power(const VehicleParams& p, double v_mps, double a_mps2) {
  const double inertial = p.mass_kg * a_mps2 * v_mps;
  const double aero = 0.5 * p.air_density_kgpm3 * p.drag_coeff * p.frontal_area_m2 * v_mps * v_mps * v_mps;
  const double rolling = p.mass_kg * kGravity * p.rolling_resist * v_mps;
  return (inertial + aero + rolling) / p.driveline_eff;
}

double fuel_rate(const VehicleParams& p, double engine_power_w) {
  if (engine_power_w < 0.0 || engine_power_w > p.engine_power_max_w) {
    throw std::out_of_range("engine power outside [0, engine_power_max_w]");
  }
  if (engine_power_w == 0.0) return 0.0;
  return p.engine_idle_fuel_gps + engine_power_w / (p.engine_eff * p.fuel_lhv_jpg);
}

Environment::Environment(DriveCycle cycle, VehicleParams vehicle, SocEnvelope envelope,
                         double velocity_norm_mps)
    : cycle_(std::move(cycle)),
      vehicle_(vehicle),
      envelope_(envelope),
      velocity_norm_mps_(velocity_norm_mps) {
  cycle_.validate();
  vehicle_.validate();
  envelope_.validate();
  if (envelope_.ts != cycle_.num_steps()) {
    throw std::invalid_argument("envelope ts must equal the cycle step count");
  }
  if (!(velocity_norm_mps_ > 0.0)) throw std::invalid_argument("velocity norm must be > 0");
}

EnvState Environment::reset(double initial_soc) const {
  if (initial_soc < 0.0 || initial_soc > 1.0) {
    throw std::invalid_argument("initial SOC outside [0,1]");
  }
  EnvState s;
  s.t = 0;
  s.soc = initial_soc;
  s.velocity_mps = cycle_.speeds_mps[0];
  s.fuel_g_cum = 0.0;
  return s;
}

Observation Environment::observe(const EnvState& state) const {
  return Observation{state.soc, state.velocity_mps / velocity_norm_mps_};
}

std::pair<EnvState, Transition> Environment::step(const EnvState& state, double action) const {
  if (state.t >= cycle_.num_steps()) throw std::logic_error("step called after episode end");
  if (action < 0.0 || action > 1.0) throw std::invalid_argument("action outside [0,1]");

  const double dt = cycle_.timestep_s;
  const double v0 = cycle_.speeds_mps[state.t];
  const double v1 = cycle_.speeds_mps[state.t + 1];
  const double accel = (v1 - v0) / dt;
  const double v_mid = 0.5 * (v0 + v1);  // trapezoid-consistent with cycle_distance

  const double p_demand = demand_power(vehicle_, v_mid, accel);
  const double p_engine = action * vehicle_.engine_power_max_w;
  const double p_battery =
      std::clamp(p_demand - p_engine, -vehicle_.motor_power_max_w, vehicle_.motor_power_max_w);

  const double charge_j = vehicle_.battery_capacity_ah * 3600.0 * vehicle_.battery_voltage_v;
  const double soc_next = std::clamp(state.soc - p_battery * dt / charge_j, 0.0, 1.0);

  const double fuel_g = fuel_rate(vehicle_, p_engine) * dt;

  EnvState next;
  next.t = state.t + 1;
  next.soc = soc_next;
  next.velocity_mps = v1;
  next.fuel_g_cum = state.fuel_g_cum + fuel_g;

  Transition tr;
  tr.s = observe(state);
  tr.action = action;
  tr.s_next = observe(next);
  tr.reward = -fuel_g;
  tr.cost = step_cost(soc_next, envelope_, next.t);
  tr.done = (next.t == cycle_.num_steps());
  return {next, tr};
}

}  // namespace hevrl
