#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ubvm/error.hpp"
#include "ubvm/harness.hpp"

namespace ubvm {
namespace {

constexpr const char* kSessionFormat = "ubvm-session";
constexpr int kSessionVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent noise stream per (run seed, firing index, channel).
std::uint64_t firing_seed(std::uint64_t seed, std::size_t firing, int channel) {
  return splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(firing) << 8) ^
                    static_cast<std::uint64_t>(channel));
}

SweepResult evaluate(const SweepBuffer& sweep, const TransducerArray& array, const EstimatorConfig& cfg) {
  SweepResult r;
  try {
    const VolumeEstimate est = process_sweep(sweep, array, cfg);
    r.outcome = est.quality == Quality::ok ? Outcome::ok : Outcome::low_echo_alert;
    r.volume_ml = est.volume_ml;
    r.point_count = est.point_count;
    r.discarded_clusters = est.discarded_clusters;
    r.masked_frames = est.masked_frames;
    r.fit = est.fit;
  } catch (const Error& e) {
    r.outcome = Outcome::error;
    r.error_kind = to_string(e.kind());
    r.message = e.what();
  }
  return r;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
}

using nlohmann::json;

json fit_json(const SphereFit& f) {
  return {{"center", {f.center.x(), f.center.y(), f.center.z()}},
          {"radius", f.radius},
          {"rms_residual", f.rms_residual},
          {"iterations", f.iterations}};
}

SphereFit fit_from(const json& j) {
  SphereFit f;
  const auto& c = j.at("center");
  f.center = Vec3(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>());
  f.radius = j.at("radius").get<double>();
  f.rms_residual = j.at("rms_residual").get<double>();
  f.iterations = j.at("iterations").get<std::size_t>();
  return f;
}

Outcome outcome_from(const std::string& s) {
  for (Outcome o : {Outcome::ok, Outcome::low_echo_alert, Outcome::error, Outcome::no_sweep}) {
    if (s == to_string(o)) return o;
  }
  throw ConfigError("unknown outcome '" + s + "'");
}

}  // namespace

const char* to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::ok: return "ok";
    case Outcome::low_echo_alert: return "low_echo_alert";
    case Outcome::error: return "error";
    case Outcome::no_sweep: return "no_sweep";
  }
  return "unknown";
}

bool operator==(const SweepResult& a, const SweepResult& b) {
  auto same_fit = [](const std::optional<SphereFit>& x, const std::optional<SphereFit>& y) {
    if (x.has_value() != y.has_value()) return false;
    if (!x) return true;
    return x->center == y->center && x->radius == y->radius && x->rms_residual == y->rms_residual &&
           x->iterations == y->iterations;
  };
  return a.outcome == b.outcome && a.error_kind == b.error_kind && a.message == b.message &&
         a.volume_ml == b.volume_ml && a.point_count == b.point_count &&
         a.discarded_clusters == b.discarded_clusters && a.masked_frames == b.masked_frames &&
         same_fit(a.fit, b.fit);
}

StreamEstimate estimate_stream(std::span<const TimestampFrame> frames,
                               std::span<const SampleRecord> samples,
                               const TransducerArray& array, const EstimatorConfig& cfg) {
  // Completed sweeps keyed by the stream index of their first frame.
  std::vector<std::pair<std::size_t, SweepBuffer>> sweeps;
  SweepAssembler assembler;
  std::size_t start = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (auto done = assembler.push(frames[i])) {
      sweeps.emplace_back(start, std::move(*done));
      start = i;
    }
  }
  // Everything from `start` on is still pending.
  const std::size_t closed_until = start;

  StreamEstimate out;
  std::size_t next = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const SampleRecord& s = samples[k];
    const std::size_t end = s.frame_offset + s.frame_count;
    const bool closed = s.frame_count == 0 ? s.frame_offset <= closed_until : end <= closed_until;
    if (!closed || end > frames.size()) {
      out.incomplete.push_back(k);
      continue;
    }
    while (next < sweeps.size() && sweeps[next].first < s.frame_offset) ++next;
    SweepResult r;
    if (s.frame_count == 0) {
      r = evaluate(SweepBuffer{}, array, cfg);
    } else if (next < sweeps.size() && sweeps[next].first < end) {
      r = evaluate(sweeps[next].second, array, cfg);
      ++next;
    } else {
      r.outcome = Outcome::no_sweep;
      r.message = "frames merged into the preceding sweep (no 4 -> 1 rollover)";
    }
    out.results.push_back(std::move(r));
    out.complete.push_back(k);
  }
  return out;
}

SessionLog run_scenario(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  Scenario sc = scenario;
  sc.estimator.tick_rate = sc.receiver.tick_rate;

  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);

  SessionLog log;
  log.scenario = sc;

  auto fire = [&](const std::optional<BladderPhantom>& phantom, std::size_t firing,
                  std::size_t sample_index) {
    ElementHits hits{};
    if (phantom) hits = wall_intersections(sc.array, *phantom);
    SweepCaptures caps;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      const int id = sc.array.elements()[i].id;
      const EchoTrace trace = synthesize_trace(hits[i], sc.pulse, sc.response, sc.medium, sc.noise_snr_db,
                                               firing_seed(sc.seed, firing, id), sc.sampling);
      if (options.trace_dir) {
        std::ofstream out(*options.trace_dir /
                          ("trace_" + std::to_string(sample_index) + "_" + std::to_string(id) + ".txt"));
        write_trace_text(out, trace);
      }
      caps[static_cast<std::size_t>(id - 1)] = receive(trace, sc.receiver);
    }
    return caps;
  };

  std::optional<BladderPhantom> last;
  for (std::size_t k = 0; k < sc.sample_times_min.size(); ++k) {
    SampleRecord rec;
    rec.time_min = sc.sample_times_min[k];
    rec.sweep_start_s = rec.time_min * 60.0;
    const std::optional<BladderPhantom> phantom = sc.phantom_at(k);
    if (phantom) {
      // A labelled test object (flask) is scored against its label volume.
      rec.truth_ml = sc.nominal_volume_ml.value_or(phantom_volume(*phantom));
      const auto d = phantom->body_diameters();
      rec.clinical_ml = clinical_ellipsoid_volume(d[0] / 10.0, d[1] / 10.0, d[2] / 10.0);
    }
    const auto frames = run_sweep(sc.schedule, fire(phantom, k, k), sc.session_id, rec.sweep_start_s);
    rec.frame_offset = log.frames.size();
    rec.frame_count = frames.size();
    for (const auto& f : frames) log.frames.push_back(f.frame);
    log.samples.push_back(rec);
    last = phantom;
  }

  // The device keeps cycling: the first channel of the next sweep is what
  // closes the final one.
  {
    const std::size_t firing = sc.sample_times_min.size();
    const SweepCaptures caps = fire(last, firing, firing);
    const int first_channel = sc.schedule.channel_order.front();
    SweepCaptures lead{};
    lead[static_cast<std::size_t>(first_channel - 1)] = caps[static_cast<std::size_t>(first_channel - 1)];
    const double t = log.samples.back().sweep_start_s + sc.schedule.sweep_duration();
    const auto frames = run_sweep(sc.schedule, lead, sc.session_id, t);
    log.trailer_frames = frames.size();
    for (const auto& f : frames) log.frames.push_back(f.frame);
  }

  const StreamEstimate est = estimate_stream(log.frames, log.samples, sc.array, sc.estimator);
  for (std::size_t i = 0; i < est.complete.size(); ++i) {
    log.samples[est.complete[i]].result = est.results[i];
  }
  for (std::size_t k : est.incomplete) {
    log.samples[k].result.outcome = Outcome::no_sweep;
    log.samples[k].result.message = "sweep not closed by the end of the stream";
  }
  return log;
}

ReplayResult replay(const SessionLog& log) {
  ReplayResult out;
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    if (log.frames[i].session_id() != log.scenario.session_id) {
      throw IntegrityError("frame " + std::to_string(i) + " carries session id " +
                           std::to_string(log.frames[i].session_id()) + ", expected " +
                           std::to_string(log.scenario.session_id));
    }
  }
  EstimatorConfig cfg = log.scenario.estimator;
  cfg.tick_rate = log.scenario.receiver.tick_rate;
  const StreamEstimate est = estimate_stream(log.frames, log.samples, log.scenario.array, cfg);
  for (std::size_t i = 0; i < est.complete.size(); ++i) {
    const std::size_t k = est.complete[i];
    if (!(est.results[i] == log.samples[k].result)) {
      throw IntegrityError("replayed estimate for sample " + std::to_string(k) + " (t = " +
                           std::to_string(log.samples[k].time_min) + " min) differs from the log");
    }
    SampleRecord rec = log.samples[k];
    rec.result = est.results[i];
    out.samples.push_back(std::move(rec));
  }
  if (!est.incomplete.empty()) {
    std::ostringstream msg;
    msg << "incomplete sweep: " << est.incomplete.size() << " of " << log.samples.size()
        << " samples not closed by the frame stream";
    out.warnings.push_back(msg.str());
  }
  return out;
}

ReplayResult replay(const LoadedSession& session) {
  ReplayResult r = replay(session.log);
  if (session.trailing_bytes != 0) {
    r.warnings.push_back("frame stream ends with " + std::to_string(session.trailing_bytes) +
                         " bytes of a partial frame");
  }
  return r;
}

void save_session(const SessionLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "scenario.yaml", scenario_to_yaml(log.scenario));

  const auto bytes = encode_stream(log.frames);
  {
    std::ofstream out(dir / "frames.bin", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "frames.bin").string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  {
    std::ostringstream txt;
    write_frames_text(txt, log.frames);
    write_text(dir / "frames.txt", txt.str());
  }

  json j;
  j["format"] = kSessionFormat;
  j["version"] = kSessionVersion;
  j["scenario"] = log.scenario.name;
  j["session_id"] = log.scenario.session_id;
  j["frame_count"] = log.frames.size();
  j["trailer_frames"] = log.trailer_frames;
  j["samples"] = json::array();
  for (const auto& s : log.samples) {
    json r;
    r["outcome"] = to_string(s.result.outcome);
    r["error_kind"] = s.result.error_kind;
    r["message"] = s.result.message;
    r["volume_ml"] = s.result.volume_ml;
    r["point_count"] = s.result.point_count;
    r["discarded_clusters"] = s.result.discarded_clusters;
    r["masked_frames"] = s.result.masked_frames;
    r["fit"] = s.result.fit ? fit_json(*s.result.fit) : json(nullptr);
    json js;
    js["time_min"] = s.time_min;
    js["sweep_start_s"] = s.sweep_start_s;
    js["truth_ml"] = s.truth_ml;
    js["clinical_ml"] = s.clinical_ml ? json(*s.clinical_ml) : json(nullptr);
    js["frame_offset"] = s.frame_offset;
    js["frame_count"] = s.frame_count;
    js["result"] = r;
    j["samples"].push_back(js);
  }
  write_text(dir / "session.json", j.dump(2) + "\n");
}

LoadedSession load_session(const std::filesystem::path& dir) {
  LoadedSession out;
  out.log.scenario = load_scenario(dir / "scenario.yaml");

  const auto bytes = read_bytes(dir / "frames.bin");
  DecodedStream decoded = decode_stream(bytes);
  out.log.frames = std::move(decoded.frames);
  out.trailing_bytes = decoded.trailing_bytes;

  json j;
  try {
    std::ifstream in(dir / "session.json");
    if (!in) throw IoError("cannot open " + (dir / "session.json").string());
    j = json::parse(in);
    if (j.at("format").get<std::string>() != kSessionFormat || j.at("version").get<int>() != kSessionVersion) {
      throw ConfigError("session.json is not a version 1 ubvm session");
    }
    out.log.trailer_frames = j.at("trailer_frames").get<std::size_t>();
    for (const auto& js : j.at("samples")) {
      SampleRecord s;
      s.time_min = js.at("time_min").get<double>();
      s.sweep_start_s = js.at("sweep_start_s").get<double>();
      s.truth_ml = js.at("truth_ml").get<double>();
      if (!js.at("clinical_ml").is_null()) s.clinical_ml = js.at("clinical_ml").get<double>();
      s.frame_offset = js.at("frame_offset").get<std::size_t>();
      s.frame_count = js.at("frame_count").get<std::size_t>();
      const auto& r = js.at("result");
      s.result.outcome = outcome_from(r.at("outcome").get<std::string>());
      s.result.error_kind = r.at("error_kind").get<std::string>();
      s.result.message = r.at("message").get<std::string>();
      s.result.volume_ml = r.at("volume_ml").get<double>();
      s.result.point_count = r.at("point_count").get<std::size_t>();
      s.result.discarded_clusters = r.at("discarded_clusters").get<std::size_t>();
      s.result.masked_frames = r.at("masked_frames").get<std::size_t>();
      if (!r.at("fit").is_null()) s.result.fit = fit_from(r.at("fit"));
      out.log.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("session.json: ") + e.what());
  }
  return out;
}

void write_estimates_text(std::ostream& out, std::span<const SampleRecord> samples) {
  out << "# ubvm-estimates v1\n";
  out << std::setprecision(10);
  for (const auto& s : samples) {
    const std::string quality =
        s.result.outcome == Outcome::error ? s.result.error_kind : to_string(s.result.outcome);
    out << s.sweep_start_s << ' ' << s.result.volume_ml << ' ' << s.result.point_count << ' ' << quality
        << ' ' << (s.result.fit ? s.result.fit->rms_residual : 0.0) << '\n';
  }
}

}  // namespace ubvm
