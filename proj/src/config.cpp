#include "hevrl/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace hevrl {

namespace {

using nlohmann::json;

// tracks which keys a section consumed and rejects leftovers
class StrictObject {
 public:
  StrictObject(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw std::invalid_argument("config section '" + section_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config key '" + section_ + "." + key + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key)) {
        throw std::invalid_argument("unknown config key '" + section_ + "." + key + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

}  // namespace

void RunConfig::validate() const {
  method_from_name(method);  // throws on names outside the registry
  if (seeds.empty()) throw std::invalid_argument("config needs at least one seed");
  if (cycle.timestep_s <= 0.0) throw std::invalid_argument("cycle.timestep_s must be > 0");
  if (cycle.truncate_steps < 0) throw std::invalid_argument("cycle.truncate_steps must be >= 0");
  vehicle.params.validate();
  if (!(vehicle.velocity_norm_mps > 0.0)) {
    throw std::invalid_argument("vehicle.velocity_norm_mps must be > 0");
  }
  if (!(0.0 < envelope.low && envelope.low < envelope.balance &&
        envelope.balance < envelope.high && envelope.high < 1.0)) {
    throw std::invalid_argument("envelope needs 0 < low < balance < high < 1");
  }
  if (!(envelope.bl_fraction > 0.0 && envelope.bl_fraction < envelope.br_fraction &&
        envelope.br_fraction < 1.0)) {
    throw std::invalid_argument("envelope fractions need 0 < bl < br < 1");
  }
  if (network.hidden.empty()) throw std::invalid_argument("network.hidden must not be empty");
  for (int h : network.hidden) {
    if (h < 1) throw std::invalid_argument("network.hidden entries must be >= 1");
  }
  train.validate();
  attack_kind_from_name(attack.kind);
  if (attack.norm != "inf" && attack.norm != "2") {
    throw std::invalid_argument("attack.norm must be 'inf' or '2'");
  }
  AttackBudget budget{attack.norm == "inf" ? Norm::kLinf : Norm::kL2, attack.epsilon};
  budget.validate();
  make_attack_config(*this).validate();
  if (eval.episodes < 1) throw std::invalid_argument("eval.episodes must be >= 1");
  for (const auto& c : eval.conditions) condition_from_name(c);
  if (output.dir.empty()) throw std::invalid_argument("output.dir must not be empty");
}

RunConfig default_config() { return RunConfig{}; }

json config_to_json(const RunConfig& cfg) {
  json j;
  j["method"] = cfg.method;
  j["seeds"] = cfg.seeds;
  j["cycle"] = {{"path", cfg.cycle.path},
                {"timestep_s", cfg.cycle.timestep_s},
                {"start_s", cfg.cycle.start_s},
                {"truncate_steps", cfg.cycle.truncate_steps}};
  const VehicleParams& v = cfg.vehicle.params;
  j["vehicle"] = {{"mass_kg", v.mass_kg},
                  {"drag_coeff", v.drag_coeff},
                  {"frontal_area_m2", v.frontal_area_m2},
                  {"rolling_resist", v.rolling_resist},
                  {"air_density_kgpm3", v.air_density_kgpm3},
                  {"driveline_eff", v.driveline_eff},
                  {"battery_capacity_ah", v.battery_capacity_ah},
                  {"battery_voltage_v", v.battery_voltage_v},
                  {"engine_power_max_w", v.engine_power_max_w},
                  {"engine_idle_fuel_gps", v.engine_idle_fuel_gps},
                  {"engine_eff", v.engine_eff},
                  {"fuel_lhv_jpg", v.fuel_lhv_jpg},
                  {"motor_power_max_w", v.motor_power_max_w},
                  {"velocity_norm_mps", cfg.vehicle.velocity_norm_mps}};
  j["envelope"] = {{"balance", cfg.envelope.balance},
                   {"high", cfg.envelope.high},
                   {"low", cfg.envelope.low},
                   {"bl_fraction", cfg.envelope.bl_fraction},
                   {"br_fraction", cfg.envelope.br_fraction}};
  j["network"] = {{"hidden", cfg.network.hidden}};
  const TrainConfig& t = cfg.train;
  j["train"] = {{"gamma", t.gamma},
                {"gae_lambda", t.gae_lambda},
                {"clip_ratio", t.clip_ratio},
                {"actor_lr", t.actor_lr},
                {"critic_lr", t.critic_lr},
                {"epochs", t.epochs},
                {"steps_per_epoch", t.steps_per_epoch},
                {"update_iters", t.update_iters},
                {"critic_iters", t.critic_iters},
                {"kl_weight_beta", t.kl_weight_beta},
                {"kappa", t.kappa},
                {"lambda_lr", t.lambda_lr},
                {"lambda_init", t.lambda_init},
                {"polyak_tau", t.polyak_tau},
                {"eps_ramp_fraction", t.eps_ramp_fraction},
                {"scale_loss_by_lambda", t.scale_loss_by_lambda},
                {"initial_log_std", t.initial_log_std},
                {"initial_action", t.initial_action},
                {"initial_soc_jitter", t.initial_soc_jitter}};
  const AttackSection& a = cfg.attack;
  j["attack"] = {{"kind", a.kind},     {"norm", a.norm},   {"epsilon", a.epsilon},
                 {"steps", a.steps},   {"eta", a.eta},     {"beta", a.beta},
                 {"eps_q", a.eps_q},   {"eps_s", a.eps_s}, {"xi", a.xi}};
  j["eval"] = {{"episodes", cfg.eval.episodes}, {"conditions", cfg.eval.conditions}};
  j["output"] = {{"dir", cfg.output.dir}};
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  StrictObject root(j, "");
  root.get("method", cfg.method);
  root.get("seeds", cfg.seeds);

  if (const json* c = root.child("cycle")) {
    StrictObject s(*c, "cycle");
    s.get("path", cfg.cycle.path);
    s.get("timestep_s", cfg.cycle.timestep_s);
    s.get("start_s", cfg.cycle.start_s);
    s.get("truncate_steps", cfg.cycle.truncate_steps);
    s.finish();
  }
  if (const json* c = root.child("vehicle")) {
    StrictObject s(*c, "vehicle");
    VehicleParams& v = cfg.vehicle.params;
    s.get("mass_kg", v.mass_kg);
    s.get("drag_coeff", v.drag_coeff);
    s.get("frontal_area_m2", v.frontal_area_m2);
    s.get("rolling_resist", v.rolling_resist);
    s.get("air_density_kgpm3", v.air_density_kgpm3);
    s.get("driveline_eff", v.driveline_eff);
    s.get("battery_capacity_ah", v.battery_capacity_ah);
    s.get("battery_voltage_v", v.battery_voltage_v);
    s.get("engine_power_max_w", v.engine_power_max_w);
    s.get("engine_idle_fuel_gps", v.engine_idle_fuel_gps);
    s.get("engine_eff", v.engine_eff);
    s.get("fuel_lhv_jpg", v.fuel_lhv_jpg);
    s.get("motor_power_max_w", v.motor_power_max_w);
    s.get("velocity_norm_mps", cfg.vehicle.velocity_norm_mps);
    s.finish();
  }
  if (const json* c = root.child("envelope")) {
    StrictObject s(*c, "envelope");
    s.get("balance", cfg.envelope.balance);
    s.get("high", cfg.envelope.high);
    s.get("low", cfg.envelope.low);
    s.get("bl_fraction", cfg.envelope.bl_fraction);
    s.get("br_fraction", cfg.envelope.br_fraction);
    s.finish();
  }
  if (const json* c = root.child("network")) {
    StrictObject s(*c, "network");
    s.get("hidden", cfg.network.hidden);
    s.finish();
  }
  if (const json* c = root.child("train")) {
    StrictObject s(*c, "train");
    TrainConfig& t = cfg.train;
    s.get("gamma", t.gamma);
    s.get("gae_lambda", t.gae_lambda);
    s.get("clip_ratio", t.clip_ratio);
    s.get("actor_lr", t.actor_lr);
    s.get("critic_lr", t.critic_lr);
    s.get("epochs", t.epochs);
    s.get("steps_per_epoch", t.steps_per_epoch);
    s.get("update_iters", t.update_iters);
    s.get("critic_iters", t.critic_iters);
    s.get("kl_weight_beta", t.kl_weight_beta);
    s.get("kappa", t.kappa);
    s.get("lambda_lr", t.lambda_lr);
    s.get("lambda_init", t.lambda_init);
    s.get("polyak_tau", t.polyak_tau);
    s.get("eps_ramp_fraction", t.eps_ramp_fraction);
    s.get("scale_loss_by_lambda", t.scale_loss_by_lambda);
    s.get("initial_log_std", t.initial_log_std);
    s.get("initial_action", t.initial_action);
    s.get("initial_soc_jitter", t.initial_soc_jitter);
    s.finish();
  }
  if (const json* c = root.child("attack")) {
    StrictObject s(*c, "attack");
    AttackSection& a = cfg.attack;
    s.get("kind", a.kind);
    s.get("norm", a.norm);
    s.get("epsilon", a.epsilon);
    s.get("steps", a.steps);
    s.get("eta", a.eta);
    s.get("beta", a.beta);
    s.get("eps_q", a.eps_q);
    s.get("eps_s", a.eps_s);
    s.get("xi", a.xi);
    s.finish();
  }
  if (const json* c = root.child("eval")) {
    StrictObject s(*c, "eval");
    s.get("episodes", cfg.eval.episodes);
    s.get("conditions", cfg.eval.conditions);
    s.finish();
  }
  if (const json* c = root.child("output")) {
    StrictObject s(*c, "output");
    s.get("dir", cfg.output.dir);
    s.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse error in " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_digest(const RunConfig& cfg) {
  const std::string canon = config_to_json(cfg).dump();  // nlohmann sorts object keys
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : canon) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

AttackKind condition_from_name(std::string_view name) {
  if (name == "natural") return AttackKind::kNone;
  return attack_kind_from_name(name);
}

const char* condition_name(AttackKind kind) {
  return kind == AttackKind::kNone ? "natural" : attack_kind_name(kind);
}

Environment make_environment(const RunConfig& cfg, const std::filesystem::path& base_dir) {
  std::filesystem::path cycle_path = cfg.cycle.path;
  if (cycle_path.is_relative() && !base_dir.empty()) cycle_path = base_dir / cycle_path;
  DriveCycle cycle = load_cycle(cycle_path, cfg.cycle.timestep_s);
  if (cfg.cycle.start_s > 0 || cfg.cycle.truncate_steps > 0) {
    const int start = static_cast<int>(cfg.cycle.start_s / cfg.cycle.timestep_s);
    const int steps = cfg.cycle.truncate_steps > 0 ? cfg.cycle.truncate_steps
                                                   : cycle.num_steps() - start;
    cycle = windowed(cycle, start, steps);
  }
  const SocEnvelope envelope =
      make_envelope(cycle.num_steps(), cfg.envelope.balance, cfg.envelope.high, cfg.envelope.low,
                    cfg.envelope.bl_fraction, cfg.envelope.br_fraction);
  return Environment(std::move(cycle), cfg.vehicle.params, envelope,
                     cfg.vehicle.velocity_norm_mps);
}

AttackBudget make_budget(const RunConfig& cfg) {
  AttackBudget budget;
  budget.norm = cfg.attack.norm == "inf" ? Norm::kLinf : Norm::kL2;
  budget.epsilon = cfg.attack.epsilon;
  return budget;
}

AttackConfig make_attack_config(const RunConfig& cfg) {
  AttackConfig a;
  a.steps = cfg.attack.steps;
  a.eta = cfg.attack.eta;
  a.beta = cfg.attack.beta;
  a.eps_q = cfg.attack.eps_q;
  a.eps_s = cfg.attack.eps_s;
  a.xi = cfg.attack.xi;
  return a;
}

}  // namespace hevrl
