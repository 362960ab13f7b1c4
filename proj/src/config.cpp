// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mmpde/driver.hpp"
#include "mmpde/error.hpp"

namespace mmpde {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  require(pos == v.size() && pos > 0, "bad number for " + key + ": " + v);
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  require(x == static_cast<int>(x), "bad integer for " + key + ": " + v);
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::InvalidArgument, "bad boolean for " + key + ": " + v);
}

}  // namespace

MetricKind parse_metric_kind(const std::string& s) {
  const std::string k = lower(s);
  if (k == "hessian") return MetricKind::Hessian;
  if (k == "iso") return MetricKind::Iso;
  if (k == "arclength") return MetricKind::Arclength;
  throw Error(ErrorCode::InvalidArgument, "unknown metric kind: " + s);
}

MeshIntegrator parse_integrator(const std::string& s) {
  const std::string k = lower(s);
  if (k == "stiff") return MeshIntegrator::Stiff;
  if (k == "explicit") return MeshIntegrator::Explicit;
  throw Error(ErrorCode::InvalidArgument, "unknown integrator: " + s);
}

void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  const std::string sec = lower(section), k = lower(key);
  const std::string full = sec.empty() ? k : sec + "." + k;
  if (sec.empty() || sec == "run") {
    if (k == "problem") cfg.problem = value;
    else if (k == "n") cfg.n = to_int(full, value);
    else if (k == "moving") cfg.moving = to_bool(full, value);
    else if (k == "fixed-mesh" || k == "fixed_mesh") cfg.moving = !to_bool(full, value);
    else if (k == "tend" || k == "t_end") cfg.t_end = to_double(full, value);
    else if (k == "dt") cfg.dt = to_double(full, value);
    else if (k == "dt-max" || k == "dt_max") cfg.dt_max = to_double(full, value);
    else if (k == "init-iterations" || k == "init_iterations") cfg.init_iterations = to_int(full, value);
    else if (k == "max-steps" || k == "max_steps") cfg.max_steps = to_int(full, value);
    else throw Error(ErrorCode::InvalidArgument, "unknown setting: " + full);
  } else if (sec == "mmpde") {
    if (k == "tau") cfg.mmpde.tau = to_double(full, value);
    else if (k == "theta") cfg.mmpde.theta = to_double(full, value);
    else if (k == "p") cfg.mmpde.p = to_double(full, value);
    else if (k == "integrator") cfg.mmpde.integrator = parse_integrator(value);
    else if (k == "dt0") cfg.mmpde.dt0 = to_double(full, value);
    else if (k == "abstol") cfg.mmpde.abstol = to_double(full, value);
    else if (k == "reltol") cfg.mmpde.reltol = to_double(full, value);
    else throw Error(ErrorCode::InvalidArgument, "unknown setting: " + full);
  } else if (sec == "fem") {
    if (k == "reltol") cfg.fem.reltol = to_double(full, value);
    else if (k == "abstol") cfg.fem.abstol = to_double(full, value);
    else if (k == "fixed-step" || k == "fixed_step") cfg.fem.fixed_step = to_bool(full, value);
    else if (k == "direct-ls" || k == "direct_ls") cfg.fem.direct_ls = cfg.bvp.direct_ls = to_bool(full, value);
    else if (k == "bvp-tol" || k == "bvp_tol") cfg.bvp.tol = to_double(full, value);
    else if (k == "bvp-max-iter" || k == "bvp_max_iter") cfg.bvp.max_iter = to_int(full, value);
    else throw Error(ErrorCode::InvalidArgument, "unknown setting: " + full);
  } else if (sec == "adapt") {
    if (k == "metric") cfg.adapt.kind = parse_metric_kind(value);
    else if (k == "alpha") cfg.adapt.alpha = to_double(full, value);
    else if (k == "order") cfg.adapt.order = to_int(full, value);
    else if (k == "smoothing") cfg.adapt.smoothing = to_int(full, value);
    else if (k == "ceiling") cfg.adapt.ceiling = to_double(full, value);
    else throw Error(ErrorCode::InvalidArgument, "unknown setting: " + full);
  } else if (sec == "output") {
    if (k == "dir") cfg.output_dir = value;
    else if (k == "interval") cfg.output_interval = to_double(full, value);
    else if (k == "vtk") cfg.write_vtk = to_bool(full, value);
    else throw Error(ErrorCode::InvalidArgument, "unknown setting: " + full);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown section: " + section);
  }
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', "line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    std::string sec = section;
    if (const auto dot = key.find('.'); dot != std::string::npos && sec.empty()) {
      sec = key.substr(0, dot);
      key = key.substr(dot + 1);
    }
    apply_setting(base, sec, key, value);
  }
  return base;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

}  // namespace mmpde
