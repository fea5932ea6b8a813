#include "hevrl/drivecycle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hevrl {

void DriveCycle::validate() const {
  if (timestep_s <= 0.0) throw std::invalid_argument("cycle timestep must be > 0");
  if (speeds_mps.size() < 2) throw std::invalid_argument("cycle needs at least 2 samples");
  for (double v : speeds_mps) {
    if (!(v >= 0.0)) throw std::invalid_argument("negative speed in cycle '" + name + "'");
  }
}

namespace {

struct RawTrace {
  std::vector<double> time_s;
  std::vector<double> speed_mps;
};

RawTrace parse_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cycle file: " + path.string());

  RawTrace raw;
  std::string line;
  bool header_seen = false;
  double unit_scale = 1.0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line == "time_s,speed_mps") {
        unit_scale = 1.0;
      } else if (line == "time_s,speed_kmh") {
        unit_scale = 1.0 / 3.6;
      } else {
        throw std::runtime_error("cycle header must be time_s,speed_mps or time_s,speed_kmh (got '" +
                                 line + "')");
      }
      header_seen = true;
      continue;
    }
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
      throw std::runtime_error("malformed cycle row at line " + std::to_string(lineno));
    }
    const double t = std::stod(a);
    const double v = std::stod(b) * unit_scale;
    if (!raw.time_s.empty() && t <= raw.time_s.back()) {
      throw std::runtime_error("non-monotone time column at line " + std::to_string(lineno));
    }
    if (v < 0.0) throw std::runtime_error("negative speed at line " + std::to_string(lineno));
    raw.time_s.push_back(t);
    raw.speed_mps.push_back(v);
  }
  if (!header_seen) throw std::runtime_error("empty cycle file: " + path.string());
  if (raw.time_s.size() < 2) throw std::runtime_error("cycle trace needs at least 2 rows");
  return raw;
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + w * (ys[i + 1] - ys[i]);
}

DriveCycle resample_raw(const std::vector<double>& time_s, const std::vector<double>& speed_mps,
                        double dt, std::string name) {
  const double t0 = time_s.front();
  const double t_end = time_s.back();
  const int n = static_cast<int>(std::floor((t_end - t0) / dt + 1e-9));
  DriveCycle out;
  out.timestep_s = dt;
  out.name = std::move(name);
  out.speeds_mps.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    out.speeds_mps.push_back(interp(time_s, speed_mps, t0 + k * dt));
  }
  out.validate();
  return out;
}

}  // namespace

DriveCycle load_cycle(const std::filesystem::path& path, double timestep_s) {
  if (timestep_s <= 0.0) throw std::invalid_argument("cycle timestep must be > 0");
  RawTrace raw = parse_trace(path);
  return resample_raw(raw.time_s, raw.speed_mps, timestep_s, path.stem().string());
}

DriveCycle resample(const DriveCycle& cycle, double timestep_s) {
  cycle.validate();
  if (timestep_s <= 0.0) throw std::invalid_argument("cycle timestep must be > 0");
  std::vector<double> time_s(cycle.speeds_mps.size());
  for (std::size_t i = 0; i < time_s.size(); ++i) time_s[i] = static_cast<double>(i) * cycle.timestep_s;
  return resample_raw(time_s, cycle.speeds_mps, timestep_s, cycle.name);
}

DriveCycle truncated(const DriveCycle& cycle, int steps) {
  cycle.validate();
  if (steps < 1 || steps > cycle.num_steps()) {
    throw std::invalid_argument("truncation steps out of range");
  }
  DriveCycle out = cycle;
  out.speeds_mps.resize(static_cast<std::size_t>(steps) + 1);
  return out;
}

DriveCycle windowed(const DriveCycle& cycle, int start, int steps) {
  cycle.validate();
  if (start < 0 || steps < 1 || start + steps > cycle.num_steps()) {
    throw std::invalid_argument("cycle window out of range");
  }
  DriveCycle out;
  out.timestep_s = cycle.timestep_s;
  out.name = cycle.name;
  out.speeds_mps.assign(cycle.speeds_mps.begin() + start,
                        cycle.speeds_mps.begin() + start + steps + 1);
  return out;
}

double cycle_distance(const DriveCycle& cycle) {
  cycle.validate();
  double d = 0.0;
  for (std::size_t i = 0; i + 1 < cycle.speeds_mps.size(); ++i) {
    d += 0.5 * (cycle.speeds_mps[i] + cycle.speeds_mps[i + 1]) * cycle.timestep_s;
  }
  return d;
}

}  // namespace hevrl
