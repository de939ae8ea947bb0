#pragma once

// Forward pulse-echo simulator: wall depths in, sampled receive voltage out.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ubvm/phantom.hpp"

namespace ubvm {

struct PulseSpec {
  double center_frequency = 2.0;  // MHz
  int cycles = 5;
  double drive_amplitude = 30.0;  // V, bipolar

  void validate() const;
  // Duration of the excitation burst in microseconds.
  double burst_duration_us() const { return cycles / center_frequency; }
};

struct TransducerResponse {
  double resonance = 2.0;                     // MHz
  double fractional_bandwidth_minus3db = 0.291;
  double sensitivity = 0.2;                   // round-trip echo scale, V/V
  double reflection = 0.1;                    // per-wall amplitude reflection factor

  void validate() const;

  // Gaussian spectral sigma (MHz) and the matching time-domain sigma (us) of
  // the echo envelope.
  double spectral_sigma_mhz() const;
  double envelope_sigma_us() const;
};

struct SamplingSpec {
  double sample_rate = 40.0;   // MHz
  double start_time = 0.0;     // us after firing
  double duration = 300.0;     // us
};

struct EchoTrace {
  double sample_rate = 40.0;  // MHz
  double start_time = 0.0;    // us after firing
  std::vector<double> samples;

  double sample_period() const { return 1.0 / sample_rate; }
  double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate; }
};

// Round-trip travel time (us) to a reflector at depth mm, c in m/s.
double round_trip_time(double depth_mm, double speed_m_per_s);

// Two-way linear amplitude factor for frequency-dependent attenuation.
double path_attenuation(double depth_mm, double frequency_mhz, const TissueMedium& medium);

// Peak amplitude (V) of a single wall echo before any receiver gain.
double echo_amplitude(double depth_mm, const PulseSpec& pulse, const TransducerResponse& response,
                      const TissueMedium& medium);

// Two Gabor echoes (Gaussian envelope, cosine carrier with its crest at the
// envelope peak) at the round-trip times of the two walls. Noise is white
// Gaussian; snr_db is 20 log10(anterior peak / noise rms). nullopt means
// noiseless. A miss produces noise only, referenced to the amplitude a wall
// at the pre-wall offset would return.
//
// Throws ParameterError if snr_db is given but not finite, or if the
// sampling rate is below 4x the transducer resonance.
EchoTrace synthesize_trace(const std::optional<WallDepths>& depths, const PulseSpec& pulse,
                           const TransducerResponse& response, const TissueMedium& medium,
                           std::optional<double> noise_snr_db, std::uint64_t seed,
                           const SamplingSpec& sampling = {});

// Writes "# ubvm-trace v1" then one "time_us voltage_V" line per sample.
void write_trace_text(std::ostream& out, const EchoTrace& trace);
EchoTrace read_trace_text(std::istream& in);

}  // namespace ubvm
