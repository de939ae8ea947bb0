#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "ubvm/error.hpp"
#include "ubvm/harness.hpp"

namespace ubvm {
namespace {

constexpr const char* kScenarioHeader = "# ubvm-scenario v1";
constexpr int kScenarioVersion = 1;

// In-vitro flasks sit in deionised water.
TissueMedium water() { return {1480.0, 0.0022, 15.0}; }

// Echo scale that keeps both walls well above the comparator window when
// no noise is added.
TransducerResponse strong_response() {
  TransducerResponse r;
  r.sensitivity = 0.2;
  return r;
}

// With noise referenced to the anterior echo, the echo must sit between the
// noise floor and the hysteresis window; this scale puts the amplified
// anterior peak near twice the rise margin.
TransducerResponse noisy_response() {
  TransducerResponse r;
  r.sensitivity = 0.028;
  return r;
}

double wall_center_z(const Scenario& s, double radius) {
  return s.array.origin().z() + s.medium.pre_wall_offset + radius;
}

Scenario flask_scenario(const std::string& name, double volume_ml) {
  Scenario s;
  s.name = name;
  s.medium = water();
  s.response = noisy_response();
  s.noise_snr_db = 20.0;
  s.nominal_volume_ml = volume_ml;
  const double r = sphere_radius_for_volume(volume_ml);
  s.source = PhantomSequence{{BladderPhantom::flask(Vec3(0, 0, wall_center_z(s, r)), r)}};
  return s;
}

Scenario volume_sweep() {
  Scenario s;
  s.name = "volume-sweep";
  s.response = strong_response();
  PhantomSequence seq;
  s.sample_times_min.clear();
  const double volumes[] = {84, 100, 200, 300, 400, 500, 650, 800};
  for (std::size_t i = 0; i < std::size(volumes); ++i) {
    const double r = sphere_radius_for_volume(volumes[i]);
    seq.phantoms.push_back(BladderPhantom::sphere(Vec3(0, 0, wall_center_z(s, r)), r));
    s.sample_times_min.push_back(30.0 * static_cast<double>(i));
  }
  s.source = std::move(seq);
  return s;
}

Scenario micturition_linear() {
  Scenario s;
  s.name = "micturition-linear";
  // The beam crosses mostly urine, so the effective path loss is far below
  // that of solid tissue.
  s.medium = {1480.0, 0.05, 15.0};
  s.response = noisy_response();
  s.noise_snr_db = 20.0;
  s.source = ProfileSource{MicturitionProfile({{0.0, 0.0}, {240.0, 400.0}}), {0.0, 0.0}};
  s.sample_times_min.clear();
  for (int t = 0; t <= 240; t += 30) s.sample_times_min.push_back(t);
  return s;
}

Scenario low_echo() {
  Scenario s;
  s.name = "low-echo";
  s.response = strong_response();
  const double r = sphere_radius_for_volume(250.0);
  const double z = wall_center_z(s, r);
  // First placement loses transducer 2, the second loses 2 and 3.
  s.source = PhantomSequence{{BladderPhantom::sphere(Vec3(-23.7, 23.7, z), r),
                              BladderPhantom::sphere(Vec3(-36.0, 0.0, z), r)}};
  s.sample_times_min = {0.0, 30.0};
  return s;
}

Scenario ellipsoid_mild() {
  Scenario s;
  s.name = "ellipsoid-mild";
  s.response = strong_response();
  // Prolate along the beam axis, 1.3:1, 300 mL.
  const double a = std::cbrt(3.0 * 300.0 * kMm3PerMl / (4.0 * std::numbers::pi * 1.3));
  const Vec3 axes(a, a, 1.3 * a);
  s.source = PhantomSequence{{BladderPhantom::ellipsoid(Vec3(0, 0, wall_center_z(s, axes.z())), axes)}};
  return s;
}

// ---- YAML helpers -------------------------------------------------------

YAML::Node vec_node(const Vec3& v) {
  YAML::Node n(YAML::NodeType::Sequence);
  n.SetStyle(YAML::EmitterStyle::Flow);
  for (int i = 0; i < 3; ++i) n.push_back(v[i]);
  return n;
}

YAML::Node vec_node(const Eigen::Vector2d& v) {
  YAML::Node n(YAML::NodeType::Sequence);
  n.SetStyle(YAML::EmitterStyle::Flow);
  n.push_back(v.x());
  n.push_back(v.y());
  return n;
}

template <int N>
Eigen::Matrix<double, N, 1> read_vec(const YAML::Node& n, const char* what) {
  if (!n.IsSequence() || n.size() != N) {
    throw ConfigError(std::string(what) + " must be a list of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = n[i].as<double>();
  return v;
}

template <typename T>
void read_opt(const YAML::Node& parent, const char* key, T& out) {
  if (const YAML::Node n = parent[key]; n && !n.IsNull()) out = n.as<T>();
}

YAML::Node phantom_node(const BladderPhantom& p) {
  YAML::Node n;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SphereShape>) {
          n["type"] = "sphere";
          n["center"] = vec_node(s.center);
          n["radius"] = s.radius;
        } else if constexpr (std::is_same_v<T, EllipsoidShape>) {
          n["type"] = "ellipsoid";
          n["center"] = vec_node(s.center);
          n["semi_axes"] = vec_node(s.semi_axes);
        } else {
          n["type"] = "flask";
          n["center"] = vec_node(s.center);
          n["radius"] = s.radius;
          n["neck_radius"] = s.neck_radius;
          n["neck_length"] = s.neck_length;
          n["neck_axis"] = vec_node(s.neck_axis);
        }
      },
      p.shape());
  return n;
}

BladderPhantom phantom_from(const YAML::Node& n) {
  const auto type = n["type"].as<std::string>("sphere");
  const Vec3 center = read_vec<3>(n["center"], "phantom center");
  if (type == "sphere") {
    if (n["volume_ml"]) return BladderPhantom::sphere_with_volume(center, n["volume_ml"].as<double>());
    return BladderPhantom::sphere(center, n["radius"].as<double>());
  }
  if (type == "ellipsoid") return BladderPhantom::ellipsoid(center, read_vec<3>(n["semi_axes"], "semi_axes"));
  if (type == "flask") {
    FlaskShape f;
    f.center = center;
    f.radius = n["volume_ml"] ? sphere_radius_for_volume(n["volume_ml"].as<double>())
                              : n["radius"].as<double>();
    read_opt(n, "neck_radius", f.neck_radius);
    read_opt(n, "neck_length", f.neck_length);
    if (n["neck_axis"]) f.neck_axis = read_vec<3>(n["neck_axis"], "neck_axis");
    return BladderPhantom(f);
  }
  throw ConfigError("unknown phantom type '" + type + "'");
}

}  // namespace

void Scenario::validate() const {
  if (name.empty()) throw ConfigError("scenario needs a name");
  medium.validate();
  pulse.validate();
  response.validate();
  receiver.validate();
  schedule.validate();
  if (sample_times_min.empty()) throw ConfigError("scenario needs at least one sample time");
  for (std::size_t i = 1; i < sample_times_min.size(); ++i) {
    if (!(sample_times_min[i] > sample_times_min[i - 1])) {
      throw ConfigError("sample times must be strictly increasing");
    }
  }
  if (noise_snr_db && !std::isfinite(*noise_snr_db)) throw ParameterError("noise SNR must be finite");
  if (const auto* seq = std::get_if<PhantomSequence>(&source)) {
    if (seq->phantoms.empty()) throw ConfigError("scenario has no phantom");
    if (seq->phantoms.size() != 1 && seq->phantoms.size() != sample_times_min.size()) {
      throw ConfigError("need one phantom, or one per sample time");
    }
  } else {
    const auto& prof = std::get<ProfileSource>(source).profile;
    for (double t : sample_times_min) {
      if (t < prof.start() || t > prof.end()) {
        throw RangeError("sample time " + std::to_string(t) + " min outside the fill profile");
      }
    }
  }
}

std::optional<BladderPhantom> Scenario::phantom_at(std::size_t k) const {
  if (const auto* seq = std::get_if<PhantomSequence>(&source)) {
    return seq->phantoms.size() == 1 ? seq->phantoms.front() : seq->phantoms.at(k);
  }
  const auto& prof = std::get<ProfileSource>(source);
  const double v = prof.profile.volume_at(sample_times_min.at(k));
  if (!(v > 0.0)) return std::nullopt;
  const double r = sphere_radius_for_volume(v);
  return BladderPhantom::sphere(
      Vec3(prof.lateral_center.x(), prof.lateral_center.y(), wall_center_z(*this, r)), r);
}

std::vector<std::string> builtin_scenario_names() {
  return {"flask-250", "flask-500", "volume-sweep", "micturition-linear", "low-echo", "ellipsoid-mild"};
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "flask-250") return flask_scenario(name, 250.0);
  if (name == "flask-500") return flask_scenario(name, 500.0);
  if (name == "volume-sweep") return volume_sweep();
  if (name == "micturition-linear") return micturition_linear();
  if (name == "low-echo") return low_echo();
  if (name == "ellipsoid-mild") return ellipsoid_mild();
  throw ConfigError("unknown scenario '" + name + "'");
}

std::string scenario_to_yaml(const Scenario& s) {
  YAML::Node root;
  root["format"] = "ubvm-scenario";
  root["version"] = kScenarioVersion;
  root["name"] = s.name;
  root["seed"] = s.seed;
  root["session_id"] = s.session_id;
  if (s.noise_snr_db) {
    root["noise_snr_db"] = *s.noise_snr_db;
  } else {
    root["noise_snr_db"] = YAML::Node(YAML::NodeType::Null);
  }
  if (s.nominal_volume_ml) root["nominal_volume_ml"] = *s.nominal_volume_ml;
  YAML::Node times(YAML::NodeType::Sequence);
  times.SetStyle(YAML::EmitterStyle::Flow);
  for (double t : s.sample_times_min) times.push_back(t);
  root["sample_times_min"] = times;

  if (const auto* seq = std::get_if<PhantomSequence>(&s.source)) {
    for (const auto& p : seq->phantoms) root["phantoms"].push_back(phantom_node(p));
  } else {
    const auto& prof = std::get<ProfileSource>(s.source);
    YAML::Node samples(YAML::NodeType::Sequence);
    for (const auto& smp : prof.profile.samples()) {
      YAML::Node pair(YAML::NodeType::Sequence);
      pair.SetStyle(YAML::EmitterStyle::Flow);
      pair.push_back(smp.time_min);
      pair.push_back(smp.volume_ml);
      samples.push_back(pair);
    }
    root["profile"]["samples"] = samples;
    root["profile"]["lateral_center"] = vec_node(prof.lateral_center);
  }

  YAML::Node arr;
  arr["origin"] = vec_node(s.array.origin());
  arr["patch_extent"] = vec_node(s.array.patch_extent());
  for (const auto& e : s.array.elements()) {
    YAML::Node en;
    en["id"] = e.id;
    en["position"] = vec_node(e.position);
    en["beam"] = vec_node(e.beam_direction);
    arr["elements"].push_back(en);
  }
  root["array"] = arr;

  root["medium"]["speed_of_sound"] = s.medium.speed_of_sound;
  root["medium"]["attenuation_coeff"] = s.medium.attenuation_coeff;
  root["medium"]["pre_wall_offset"] = s.medium.pre_wall_offset;

  root["pulse"]["center_frequency"] = s.pulse.center_frequency;
  root["pulse"]["cycles"] = s.pulse.cycles;
  root["pulse"]["drive_amplitude"] = s.pulse.drive_amplitude;

  root["transducer"]["resonance"] = s.response.resonance;
  root["transducer"]["fractional_bandwidth"] = s.response.fractional_bandwidth_minus3db;
  root["transducer"]["sensitivity"] = s.response.sensitivity;
  root["transducer"]["reflection"] = s.response.reflection;

  root["sampling"]["sample_rate"] = s.sampling.sample_rate;
  root["sampling"]["start_time"] = s.sampling.start_time;
  root["sampling"]["duration"] = s.sampling.duration;

  root["receiver"]["gain"] = s.receiver.gain;
  root["receiver"]["lpf_cutoff"] = s.receiver.lpf_cutoff;
  root["receiver"]["v_supply"] = s.receiver.v_supply;
  root["receiver"]["bias"] = s.receiver.bias;
  root["receiver"]["threshold_rise"] = s.receiver.threshold_rise;
  root["receiver"]["threshold_fall"] = s.receiver.threshold_fall;
  root["receiver"]["tick_rate"] = s.receiver.tick_rate;
  root["receiver"]["capture_depth"] = s.receiver.capture_depth;

  root["schedule"]["pulse_period"] = s.schedule.pulse_period;
  root["schedule"]["channel_dwell"] = s.schedule.channel_dwell;
  YAML::Node order(YAML::NodeType::Sequence);
  order.SetStyle(YAML::EmitterStyle::Flow);
  for (int c : s.schedule.channel_order) order.push_back(c);
  root["schedule"]["channel_order"] = order;
  root["schedule"]["notification_interval"] = s.schedule.notification_interval;

  root["estimator"]["speed_of_sound"] = s.estimator.speed_of_sound;
  root["estimator"]["gap_threshold_us"] = s.estimator.gap_threshold_us;
  root["estimator"]["onset_correction_us"] = s.estimator.onset_correction_us;
  root["estimator"]["max_iterations"] = s.estimator.fit.max_iterations;
  root["estimator"]["gradient_tolerance"] = s.estimator.fit.gradient_tolerance;
  root["estimator"]["max_condition_number"] = s.estimator.max_condition_number;

  YAML::Emitter em;
  em.SetDoublePrecision(17);
  em << root;
  return std::string(kScenarioHeader) + "\n" + em.c_str() + "\n";
}

Scenario scenario_from_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("scenario file must be a mapping");
  if (!root["version"] || root["version"].as<int>(0) != kScenarioVersion) {
    throw ConfigError("scenario file needs 'version: 1'");
  }

  try {
    Scenario s;
    s.name = root["name"].as<std::string>("");
    read_opt(root, "seed", s.seed);
    read_opt(root, "session_id", s.session_id);
    if (const auto n = root["noise_snr_db"]; n && !n.IsNull()) s.noise_snr_db = n.as<double>();
    if (const auto n = root["nominal_volume_ml"]; n && !n.IsNull()) s.nominal_volume_ml = n.as<double>();
    if (root["sample_times_min"]) s.sample_times_min = root["sample_times_min"].as<std::vector<double>>();

    if (const auto m = root["medium"]) {
      read_opt(m, "speed_of_sound", s.medium.speed_of_sound);
      read_opt(m, "attenuation_coeff", s.medium.attenuation_coeff);
      read_opt(m, "pre_wall_offset", s.medium.pre_wall_offset);
    }
    if (const auto a = root["array"]) {
      Vec3 origin = Vec3::Zero();
      Eigen::Vector2d extent(30.0, 30.0);
      if (a["origin"]) origin = read_vec<3>(a["origin"], "array origin");
      if (a["patch_extent"]) extent = read_vec<2>(a["patch_extent"], "patch_extent");
      if (const auto els = a["elements"]) {
        if (!els.IsSequence() || els.size() != 4) throw ConfigError("array needs exactly 4 elements");
        std::array<TransducerElement, 4> elements;
        for (std::size_t i = 0; i < 4; ++i) {
          elements[i].id = els[i]["id"].as<int>();
          elements[i].position = read_vec<2>(els[i]["position"], "element position");
          if (els[i]["beam"]) elements[i].beam_direction = read_vec<3>(els[i]["beam"], "beam");
        }
        s.array = TransducerArray(elements, extent, origin);
      } else {
        s.array = TransducerArray::default_patch(origin);
      }
    }
    if (const auto p = root["pulse"]) {
      read_opt(p, "center_frequency", s.pulse.center_frequency);
      read_opt(p, "cycles", s.pulse.cycles);
      read_opt(p, "drive_amplitude", s.pulse.drive_amplitude);
    }
    if (const auto t = root["transducer"]) {
      read_opt(t, "resonance", s.response.resonance);
      read_opt(t, "fractional_bandwidth", s.response.fractional_bandwidth_minus3db);
      read_opt(t, "sensitivity", s.response.sensitivity);
      read_opt(t, "reflection", s.response.reflection);
    }
    if (const auto t = root["sampling"]) {
      read_opt(t, "sample_rate", s.sampling.sample_rate);
      read_opt(t, "start_time", s.sampling.start_time);
      read_opt(t, "duration", s.sampling.duration);
    }
    if (const auto r = root["receiver"]) {
      read_opt(r, "gain", s.receiver.gain);
      read_opt(r, "lpf_cutoff", s.receiver.lpf_cutoff);
      read_opt(r, "v_supply", s.receiver.v_supply);
      read_opt(r, "bias", s.receiver.bias);
      read_opt(r, "threshold_rise", s.receiver.threshold_rise);
      read_opt(r, "threshold_fall", s.receiver.threshold_fall);
      read_opt(r, "tick_rate", s.receiver.tick_rate);
      read_opt(r, "capture_depth", s.receiver.capture_depth);
    }
    if (const auto r = root["schedule"]) {
      read_opt(r, "pulse_period", s.schedule.pulse_period);
      read_opt(r, "channel_dwell", s.schedule.channel_dwell);
      if (r["channel_order"]) {
        const auto order = r["channel_order"].as<std::vector<int>>();
        if (order.size() != 4) throw ConfigError("channel_order needs 4 entries");
        std::copy(order.begin(), order.end(), s.schedule.channel_order.begin());
      }
      read_opt(r, "notification_interval", s.schedule.notification_interval);
    }
    if (const auto e = root["estimator"]) {
      read_opt(e, "speed_of_sound", s.estimator.speed_of_sound);
      read_opt(e, "gap_threshold_us", s.estimator.gap_threshold_us);
      read_opt(e, "onset_correction_us", s.estimator.onset_correction_us);
      read_opt(e, "max_iterations", s.estimator.fit.max_iterations);
      read_opt(e, "gradient_tolerance", s.estimator.fit.gradient_tolerance);
      read_opt(e, "max_condition_number", s.estimator.max_condition_number);
    }
    s.estimator.tick_rate = s.receiver.tick_rate;

    if (const auto ph = root["phantoms"]) {
      PhantomSequence seq;
      for (const auto& n : ph) seq.phantoms.push_back(phantom_from(n));
      s.source = std::move(seq);
    } else if (const auto pr = root["profile"]) {
      ProfileSource src;
      std::vector<MicturitionProfile::Sample> samples;
      for (const auto& pair : pr["samples"]) {
        if (!pair.IsSequence() || pair.size() != 2) throw ConfigError("profile samples are [time, volume]");
        samples.push_back({pair[0].as<double>(), pair[1].as<double>()});
      }
      src.profile = MicturitionProfile(std::move(samples));
      if (pr["lateral_center"]) src.lateral_center = read_vec<2>(pr["lateral_center"], "lateral_center");
      s.source = std::move(src);
    } else {
      throw ConfigError("scenario needs 'phantoms' or 'profile'");
    }
    s.validate();
    return s;
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario YAML: ") + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_yaml(buf.str());
}

}  // namespace ubvm
