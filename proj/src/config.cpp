// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#include "ddest/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

namespace ddest {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

// Edit distance for the unknown-key suggestion list.
int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config: " + key + ": '" + value +
                          "' is not a number");
  }
}

}  // namespace

KeyValues KeyValues::defaults() {
  KeyValues kv;
  kv.values_ = {
      {"grid.subcarriers", "1024"},
      {"grid.symbols", "100"},
      {"grid.subcarrier_spacing", "156250"},
      {"grid.symbol_interval", "6.4e-05"},
      {"scene.tx", "2.5,0,0"},
      {"scene.rx", "2.349231551964771,0.8550503583141718,0"},
      {"scene.center", "0,0,0"},
      {"scene.sphere_radius", "0.5,0.35"},
      {"scene.sphere_phase", "0,3.141592653589793"},
      {"scene.rotation_rate", "30"},
      {"scene.wavelength", "0.055517121851851846"},
      {"scene.los_gain_db", "0"},
      {"scene.noise_std", "0.1"},
      {"scene.clutter", ""},
      {"cfar.m_ref", "15"},
      {"cfar.n_ref", "7"},
      {"cfar.guard_delay", "1"},
      {"cfar.guard_doppler", "1"},
      {"cfar.r", "79"},
      {"cfar.alpha_os", "11.39"},
      {"mle.max_paths", "25"},
      {"mle.max_gradient_iterations", "50"},
      {"mle.step_tol", "1e-08"},
      {"mle.validity_snr_db", "8"},
      {"mle.damping_init", "0.001"},
      {"pipeline.background_subtract", "true"},
      {"pipeline.pad_delay", "1"},
      {"pipeline.pad_doppler", "1"},
      {"eval.boundary_fraction", "0.5"},
      {"sweep.angles_deg", "0,20,45,90,135,160,180"},
      {"sweep.algorithms", "cfar,mle"},
      {"sweep.frames_per_angle", "50"},
      {"sweep.los_peak_db", "40"},
      {"sweep.los_width_deg", "30"},
      {"sweep.use_los_profile", "true"},
      {"synth.frames", "10"},
      {"seed", "1"},
  };
  return kv;
}

void KeyValues::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config '" + path.string() + "' for reading");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config: '" + path.string() + "' line " +
                            std::to_string(line_no) +
                            ": expected 'key = value', got '" + t + "'");
    try {
      set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError("config: '" + path.string() + "' line " +
                            std::to_string(line_no) + ": " + e.what());
    }
  }
}

void KeyValues::apply_assignment(const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ValidationError("--set expects key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void KeyValues::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    std::vector<std::pair<int, std::string>> near;
    for (const auto& [k, v] : values_)
      near.emplace_back(edit_distance(key, k), k);
    std::sort(near.begin(), near.end());
    std::string hint;
    for (std::size_t i = 0; i < near.size() && i < 3; ++i)
      hint += (i ? ", " : "") + near[i].second;
    throw ValidationError("unknown config key '" + key +
                          "' (nearest: " + hint + ")");
  }
  it->second = value;
}

const std::string& KeyValues::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw ValidationError("unknown config key '" + key + "'");
  return it->second;
}

double KeyValues::get_double(const std::string& key) const {
  return parse_double(key, raw(key));
}

int KeyValues::get_int(const std::string& key) const {
  const std::string& v = raw(key);
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config: " + key + ": '" + v +
                          "' is not an integer");
  return out;
}

bool KeyValues::get_bool(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config: " + key + ": '" + v +
                        "' is not a boolean (true/false/1/0)");
}

std::uint64_t KeyValues::get_uint64(const std::string& key) const {
  const std::string& v = raw(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config: " + key + ": '" + v +
                          "' is not an unsigned integer");
  return out;
}

std::vector<double> KeyValues::get_double_list(const std::string& key) const {
  const std::string& v = raw(key);
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const std::string& part : split(v, ','))
    out.push_back(parse_double(key, part));
  return out;
}

std::vector<std::string> KeyValues::get_string_list(
    const std::string& key) const {
  const std::string& v = raw(key);
  if (trim(v).empty()) return {};
  return split(v, ',');
}

std::string KeyValues::canonical_text() const {
  std::string text;
  for (const auto& [k, v] : values_) text += k + " = " + v + "\n";
  return text;
}

std::string KeyValues::hash_hex() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

namespace {

Eigen::Vector3d get_vec3(const KeyValues& kv, const std::string& key) {
  std::vector<double> v = kv.get_double_list(key);
  if (v.size() != 3)
    throw ValidationError("config: " + key + ": expected 3 components, got " +
                          std::to_string(v.size()));
  return {v[0], v[1], v[2]};
}

std::array<double, 2> get_pair(const KeyValues& kv, const std::string& key) {
  std::vector<double> v = kv.get_double_list(key);
  if (v.size() != 2)
    throw ValidationError("config: " + key + ": expected 2 components, got " +
                          std::to_string(v.size()));
  return {v[0], v[1]};
}

std::vector<PathParams> parse_clutter(const KeyValues& kv) {
  const std::string& raw = kv.raw("scene.clutter");
  std::vector<PathParams> out;
  if (trim(raw).empty()) return out;
  for (const std::string& group : split(raw, ';')) {
    std::vector<std::string> f = split(group, ',');
    if (f.size() != 4)
      throw ValidationError(
          "config: scene.clutter: each path needs 4 fields "
          "(weight_re,weight_im,delay_s,doppler_hz), got '" +
          group + "'");
    PathParams p;
    p.weight = Complex(parse_double("scene.clutter", f[0]),
                       parse_double("scene.clutter", f[1]));
    p.delay_s = parse_double("scene.clutter", f[2]);
    p.doppler_hz = parse_double("scene.clutter", f[3]);
    out.push_back(p);
  }
  return out;
}

}  // namespace

RunConfig RunConfig::from(const KeyValues& kv) {
  RunConfig rc;
  rc.grid.subcarriers = kv.get_int("grid.subcarriers");
  rc.grid.symbols = kv.get_int("grid.symbols");
  rc.grid.subcarrier_spacing = kv.get_double("grid.subcarrier_spacing");
  rc.grid.symbol_interval = kv.get_double("grid.symbol_interval");
  rc.grid.validate();

  rc.scene.tx_pos = get_vec3(kv, "scene.tx");
  rc.scene.rx_pos = get_vec3(kv, "scene.rx");
  rc.scene.center = get_vec3(kv, "scene.center");
  rc.scene.sphere_radius = get_pair(kv, "scene.sphere_radius");
  rc.scene.sphere_phase = get_pair(kv, "scene.sphere_phase");
  rc.scene.rotation_rate = kv.get_double("scene.rotation_rate");
  rc.scene.wavelength = kv.get_double("scene.wavelength");
  rc.scene.los_gain_db = kv.get_double("scene.los_gain_db");
  rc.scene.noise_std = kv.get_double("scene.noise_std");
  rc.scene.clutter = parse_clutter(kv);
  rc.scene.validate();

  rc.cfar.ref_window_delay = kv.get_int("cfar.m_ref");
  rc.cfar.ref_window_doppler = kv.get_int("cfar.n_ref");
  rc.cfar.guard_delay = kv.get_int("cfar.guard_delay");
  rc.cfar.guard_doppler = kv.get_int("cfar.guard_doppler");
  rc.cfar.rank = kv.get_int("cfar.r");
  rc.cfar.alpha_os = kv.get_double("cfar.alpha_os");

  rc.mle.max_paths = kv.get_int("mle.max_paths");
  rc.mle.max_gradient_iterations = kv.get_int("mle.max_gradient_iterations");
  rc.mle.step_tol = kv.get_double("mle.step_tol");
  rc.mle.validity_snr_db = kv.get_double("mle.validity_snr_db");
  rc.mle.damping_init = kv.get_double("mle.damping_init");
  rc.mle.validate();

  rc.pipeline.background_subtract = kv.get_bool("pipeline.background_subtract");
  rc.pipeline.pad_delay = kv.get_int("pipeline.pad_delay");
  rc.pipeline.pad_doppler = kv.get_int("pipeline.pad_doppler");
  if (rc.pipeline.pad_delay < 1 || rc.pipeline.pad_doppler < 1)
    throw ValidationError("config: pipeline padding factors must be >= 1");
  rc.mle.background_subtract = rc.pipeline.background_subtract;

  // The CFAR window must fit the padded spectrum this pipeline produces.
  rc.cfar.validate(rc.grid.subcarriers * rc.pipeline.pad_delay,
                   rc.grid.symbols * rc.pipeline.pad_doppler);

  rc.boundary.fraction = kv.get_double("eval.boundary_fraction");
  rc.boundary.validate();

  rc.synth.frames = kv.get_int("synth.frames");
  if (rc.synth.frames < 1)
    throw ValidationError("config: synth.frames must be >= 1");
  rc.seed = kv.get_uint64("seed");

  rc.sweep.scene = rc.scene;
  rc.sweep.grid = rc.grid;
  rc.sweep.cfar = rc.cfar;
  rc.sweep.mle = rc.mle;
  rc.sweep.pipeline = rc.pipeline;
  rc.sweep.boundary = rc.boundary;
  rc.sweep.angles_deg = kv.get_double_list("sweep.angles_deg");
  rc.sweep.algorithms.clear();
  for (const std::string& name : kv.get_string_list("sweep.algorithms"))
    rc.sweep.algorithms.push_back(algorithm_from_name(name));
  rc.sweep.frames_per_angle = kv.get_int("sweep.frames_per_angle");
  rc.sweep.los_peak_db = kv.get_double("sweep.los_peak_db");
  rc.sweep.los_width_deg = kv.get_double("sweep.los_width_deg");
  rc.sweep.use_los_profile = kv.get_bool("sweep.use_los_profile");
  rc.sweep.seed = rc.seed;
  rc.sweep.validate();
  return rc;
}

}  // namespace ddest
