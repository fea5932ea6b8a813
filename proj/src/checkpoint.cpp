#include "hevrl/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hevrl {

namespace {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
  return {{"sizes", net.sizes()},
          {"dtype", "f64"},
          {"params", std::vector<double>(net.params().begin(), net.params().end())}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net(j.at("sizes").get<std::vector<int>>());
  if (j.at("dtype").get<std::string>() != "f64") {
    throw std::runtime_error("checkpoint dtype mismatch");
  }
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.params().size()) {
    throw std::runtime_error("checkpoint parameter count mismatch");
  }
  std::copy(params.begin(), params.end(), net.params().begin());
  return net;
}

json adam_to_json(const AdamState& s) { return {{"m", s.m}, {"v", s.v}, {"t", s.t}}; }

AdamState adam_from_json(const json& j) {
  AdamState s;
  s.m = j.at("m").get<std::vector<double>>();
  s.v = j.at("v").get<std::vector<double>>();
  s.t = j.at("t").get<long>();
  return s;
}

json rng_to_json(const RngSnapshot& s) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(s.state));
  return {{"state", std::string(buf)}, {"has_spare", s.has_spare}, {"spare", s.spare}};
}

RngSnapshot rng_from_json(const json& j) {
  RngSnapshot s;
  s.state = std::stoull(j.at("state").get<std::string>(), nullptr, 16);
  s.has_spare = j.at("has_spare").get<bool>();
  s.spare = j.at("spare").get<double>();
  return s;
}

}  // namespace

Checkpoint checkpoint_from_result(const TrainResult& result, const std::string& config_digest) {
  Checkpoint ckpt;
  ckpt.method = method_name(result.method);
  ckpt.config_digest = config_digest;
  ckpt.epochs_completed = static_cast<int>(result.history.size());
  ckpt.nets = result.nets;
  ckpt.lagrangian = result.lagrangian;
  ckpt.optim = result.optim;
  ckpt.rng_policy = result.rng_policy;
  ckpt.rng_attack = result.rng_attack;
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json j;
  j["format"] = Checkpoint::kFormat;
  j["version"] = Checkpoint::kVersion;
  j["method"] = ckpt.method;
  j["config_digest"] = ckpt.config_digest;
  j["epochs_completed"] = ckpt.epochs_completed;
  j["lambda"] = ckpt.lagrangian.lambda;
  j["lambda_lr"] = ckpt.lagrangian.lambda_lr;
  j["kappa"] = ckpt.lagrangian.kappa;
  j["policy_mean"] = mlp_to_json(ckpt.nets.policy.mean);
  j["policy_log_std"] = ckpt.nets.policy.log_std;
  j["v_r"] = mlp_to_json(ckpt.nets.v_r);
  j["v_c"] = mlp_to_json(ckpt.nets.v_c);
  j["q_r"] = mlp_to_json(ckpt.nets.q_r);
  j["q_c"] = mlp_to_json(ckpt.nets.q_c);
  j["q_r_target"] = mlp_to_json(ckpt.nets.q_r_target);
  j["q_c_target"] = mlp_to_json(ckpt.nets.q_c_target);
  j["optim"] = {{"mean", adam_to_json(ckpt.optim.mean)},
                {"log_std", adam_to_json(ckpt.optim.log_std)},
                {"v_r", adam_to_json(ckpt.optim.v_r)},
                {"v_c", adam_to_json(ckpt.optim.v_c)},
                {"q_r", adam_to_json(ckpt.optim.q_r)},
                {"q_c", adam_to_json(ckpt.optim.q_c)}};
  j["rng"] = {{"policy", rng_to_json(ckpt.rng_policy)}, {"attack", rng_to_json(ckpt.rng_attack)}};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint parse error: " + std::string(e.what()));
  }
  if (!j.contains("format") || j.at("format").get<std::string>() != Checkpoint::kFormat) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  if (j.at("version").get<int>() != Checkpoint::kVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }

  Checkpoint ckpt;
  ckpt.method = j.at("method").get<std::string>();
  ckpt.config_digest = j.at("config_digest").get<std::string>();
  ckpt.epochs_completed = j.at("epochs_completed").get<int>();
  ckpt.lagrangian.lambda = j.at("lambda").get<double>();
  ckpt.lagrangian.lambda_lr = j.at("lambda_lr").get<double>();
  ckpt.lagrangian.kappa = j.at("kappa").get<double>();
  ckpt.nets.policy.mean = mlp_from_json(j.at("policy_mean"));
  ckpt.nets.policy.log_std = j.at("policy_log_std").get<std::vector<double>>();
  ckpt.nets.v_r = mlp_from_json(j.at("v_r"));
  ckpt.nets.v_c = mlp_from_json(j.at("v_c"));
  ckpt.nets.q_r = mlp_from_json(j.at("q_r"));
  ckpt.nets.q_c = mlp_from_json(j.at("q_c"));
  ckpt.nets.q_r_target = mlp_from_json(j.at("q_r_target"));
  ckpt.nets.q_c_target = mlp_from_json(j.at("q_c_target"));
  ckpt.optim.mean = adam_from_json(j.at("optim").at("mean"));
  ckpt.optim.log_std = adam_from_json(j.at("optim").at("log_std"));
  ckpt.optim.v_r = adam_from_json(j.at("optim").at("v_r"));
  ckpt.optim.v_c = adam_from_json(j.at("optim").at("v_c"));
  ckpt.optim.q_r = adam_from_json(j.at("optim").at("q_r"));
  ckpt.optim.q_c = adam_from_json(j.at("optim").at("q_c"));
  ckpt.rng_policy = rng_from_json(j.at("rng").at("policy"));
  ckpt.rng_attack = rng_from_json(j.at("rng").at("attack"));
  return ckpt;
}

}  // namespace hevrl
