#pragma once

// Scenario runner: phantom -> acoustics -> receiver -> link -> estimator,
// with session logs that can be replayed and reported.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ubvm/acoustics.hpp"
#include "ubvm/afe.hpp"
#include "ubvm/estimator.hpp"
#include "ubvm/link.hpp"
#include "ubvm/phantom.hpp"

namespace ubvm {

// Fixed phantoms: either one used at every sample time, or one per sample.
struct PhantomSequence {
  std::vector<BladderPhantom> phantoms;
};

// A sphere whose volume follows the profile. Its anterior wall stays at the
// medium's pre-wall offset below the patch; zero volume means an empty
// bladder and no echoes.
struct ProfileSource {
  MicturitionProfile profile{{{0.0, 0.0}}};
  Eigen::Vector2d lateral_center = Eigen::Vector2d::Zero();
};

struct Scenario {
  std::string name;
  std::variant<PhantomSequence, ProfileSource> source;
  TransducerArray array = TransducerArray::default_patch();
  TissueMedium medium;
  PulseSpec pulse;
  TransducerResponse response;
  SamplingSpec sampling;
  ReceiverConfig receiver;
  SweepSchedule schedule;
  EstimatorConfig estimator;  // tick_rate is taken from receiver
  std::optional<double> noise_snr_db;
  std::uint64_t seed = 1;
  std::uint16_t session_id = 1;
  std::vector<double> sample_times_min{0.0};
  // Label volume of the test object (e.g. a 250 mL flask), when it has one.
  // Used as the ground truth in place of the geometric volume.
  std::optional<double> nominal_volume_ml;

  void validate() const;
  // Phantom insonified at sample k; nullopt for an empty bladder.
  std::optional<BladderPhantom> phantom_at(std::size_t k) const;
};

std::vector<std::string> builtin_scenario_names();
// Throws ConfigError for an unknown name.
Scenario builtin_scenario(const std::string& name);

// Human-readable YAML. The first line is "# ubvm-scenario v1" and the
// document carries format/version keys. Missing sections take defaults.
std::string scenario_to_yaml(const Scenario& s);
Scenario scenario_from_yaml(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

enum class Outcome { ok, low_echo_alert, error, no_sweep };
const char* to_string(Outcome o) noexcept;

struct SweepResult {
  Outcome outcome = Outcome::no_sweep;
  std::string error_kind;  // ErrorKind name when outcome == error
  std::string message;
  double volume_ml = 0.0;
  std::size_t point_count = 0;
  std::size_t discarded_clusters = 0;
  std::size_t masked_frames = 0;
  std::optional<SphereFit> fit;

  friend bool operator==(const SweepResult& a, const SweepResult& b);
};

struct SampleRecord {
  double time_min = 0.0;
  double sweep_start_s = 0.0;  // nominal schedule time
  double truth_ml = 0.0;
  std::optional<double> clinical_ml;  // 0.52 LWH of the phantom body
  std::size_t frame_offset = 0;
  std::size_t frame_count = 0;
  SweepResult result;
};

struct SessionLog {
  Scenario scenario;
  std::vector<TimestampFrame> frames;
  std::size_t trailer_frames = 0;  // lead-in of the next sweep, closes the last one
  std::vector<SampleRecord> samples;
};

struct RunOptions {
  // Directory to dump raw echo traces into, one file per sample and channel.
  std::optional<std::filesystem::path> trace_dir;
};

SessionLog run_scenario(const Scenario& scenario, const RunOptions& options = {});

// Partitions frames into sweeps with the 4 -> 1 rule and estimates each
// sample's sweep. Samples whose frames are not closed by the end of the
// stream are reported in `incomplete`.
struct StreamEstimate {
  std::vector<SweepResult> results;  // one per entry in `complete`
  std::vector<std::size_t> complete;    // sample indices
  std::vector<std::size_t> incomplete;  // sample indices
};
StreamEstimate estimate_stream(std::span<const TimestampFrame> frames,
                               std::span<const SampleRecord> samples,
                               const TransducerArray& array, const EstimatorConfig& cfg);

struct ReplayResult {
  std::vector<SampleRecord> samples;  // records with recomputed results
  std::vector<std::string> warnings;
};

// Re-runs the estimator over the stored frames. Throws IntegrityError when a
// recomputed estimate differs from the stored one or a frame carries a
// foreign session id; decode errors propagate.
ReplayResult replay(const SessionLog& log);

// Session directory layout: scenario.yaml, frames.bin (raw frames),
// frames.txt (debug text), session.json (per-sample records).
void save_session(const SessionLog& log, const std::filesystem::path& dir);
// Raw frame bytes are decoded on load; a truncated frames.bin keeps its
// whole frames and records the leftover byte count.
struct LoadedSession {
  SessionLog log;
  std::size_t trailing_bytes = 0;
};
LoadedSession load_session(const std::filesystem::path& dir);
ReplayResult replay(const LoadedSession& session);

struct ReportRow {
  double time_min = 0.0;
  double truth_ml = 0.0;
  std::optional<double> estimate_ml;
  std::optional<double> rel_error;
  std::optional<double> clinical_ml;
  std::string quality;
};

struct Report {
  std::vector<ReportRow> rows;
  std::optional<double> max_rel_error;
  std::optional<double> mean_rel_error;
};

Report make_report(const SessionLog& log);
void write_report_table(std::ostream& out, const Report& report, const std::string& title);
// Writes report.txt, estimates.txt and volumes.txt into out_dir.
Report report(const SessionLog& log, const std::filesystem::path& out_dir);

// "time_s volume_ml point_count quality residual_mm" lines after a
// "# ubvm-estimates v1" header.
void write_estimates_text(std::ostream& out, std::span<const SampleRecord> samples);

}  // namespace ubvm
