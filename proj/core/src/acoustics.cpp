#include "ubvm/acoustics.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "ubvm/error.hpp"

namespace ubvm {
namespace {

constexpr const char* kTraceHeader = "# ubvm-trace v1";

void add_echo(EchoTrace& trace, double arrival_us, double amplitude, double f0_mhz,
              double sigma_us) {
  // Beyond 6 sigma the envelope is below 1.6e-8 of the peak.
  const double half_span = 6.0 * sigma_us;
  const double fs = trace.sample_rate;
  const auto n = static_cast<std::ptrdiff_t>(trace.samples.size());
  auto first = static_cast<std::ptrdiff_t>(std::floor((arrival_us - half_span - trace.start_time) * fs));
  auto last = static_cast<std::ptrdiff_t>(std::ceil((arrival_us + half_span - trace.start_time) * fs));
  first = std::max<std::ptrdiff_t>(first, 0);
  last = std::min<std::ptrdiff_t>(last, n - 1);
  const double inv_two_var = 1.0 / (2.0 * sigma_us * sigma_us);
  for (std::ptrdiff_t i = first; i <= last; ++i) {
    const double dt = trace.time_at(static_cast<std::size_t>(i)) - arrival_us;
    trace.samples[static_cast<std::size_t>(i)] +=
        amplitude * std::exp(-dt * dt * inv_two_var) * std::cos(2.0 * std::numbers::pi * f0_mhz * dt);
  }
}

}  // namespace

void PulseSpec::validate() const {
  if (!(center_frequency > 0.0) || !std::isfinite(center_frequency)) {
    throw ParameterError("pulse centre frequency must be > 0");
  }
  if (cycles < 1) throw ParameterError("pulse needs at least one cycle");
  if (!(drive_amplitude >= 0.0) || !std::isfinite(drive_amplitude)) {
    throw ParameterError("drive amplitude must be >= 0");
  }
}

void TransducerResponse::validate() const {
  if (!(resonance > 0.0) || !std::isfinite(resonance)) throw ParameterError("resonance must be > 0");
  if (!(fractional_bandwidth_minus3db > 0.0 && fractional_bandwidth_minus3db < 2.0)) {
    throw ParameterError("fractional bandwidth must be in (0, 2)");
  }
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) throw ParameterError("sensitivity must be >= 0");
  if (!(reflection >= 0.0) || !std::isfinite(reflection)) throw ParameterError("reflection must be >= 0");
}

double TransducerResponse::spectral_sigma_mhz() const {
  return fractional_bandwidth_minus3db * resonance / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

double TransducerResponse::envelope_sigma_us() const {
  return 1.0 / (2.0 * std::numbers::pi * spectral_sigma_mhz());
}

double round_trip_time(double depth_mm, double speed_m_per_s) {
  // mm / (m/s) = ms, so 2 d / c * 1e3 is microseconds.
  return 2.0 * depth_mm / speed_m_per_s * 1e3;
}

double path_attenuation(double depth_mm, double frequency_mhz, const TissueMedium& medium) {
  const double loss_db = medium.attenuation_coeff * 2.0 * (depth_mm / 10.0) * frequency_mhz;
  return std::pow(10.0, -loss_db / 20.0);
}

double echo_amplitude(double depth_mm, const PulseSpec& pulse, const TransducerResponse& response,
                      const TissueMedium& medium) {
  return pulse.drive_amplitude * response.sensitivity * response.reflection *
         path_attenuation(depth_mm, response.resonance, medium);
}

EchoTrace synthesize_trace(const std::optional<WallDepths>& depths, const PulseSpec& pulse,
                           const TransducerResponse& response, const TissueMedium& medium,
                           std::optional<double> noise_snr_db, std::uint64_t seed,
                           const SamplingSpec& sampling) {
  pulse.validate();
  response.validate();
  medium.validate();
  if (noise_snr_db && !std::isfinite(*noise_snr_db)) {
    throw ParameterError("noise SNR must be finite");
  }
  if (!(sampling.sample_rate >= 4.0 * response.resonance)) {
    throw ParameterError("sample rate must be at least 4x the transducer resonance");
  }
  if (!(sampling.duration > 0.0)) throw ParameterError("trace duration must be > 0");
  if (depths && !(depths->anterior < depths->posterior)) {
    throw ParameterError("anterior depth must precede posterior depth");
  }

  EchoTrace trace;
  trace.sample_rate = sampling.sample_rate;
  trace.start_time = sampling.start_time;
  trace.samples.assign(static_cast<std::size_t>(std::llround(sampling.duration * sampling.sample_rate)), 0.0);

  const double f0 = response.resonance;
  const double sigma = response.envelope_sigma_us();
  const double c = medium.speed_of_sound;

  double reference = echo_amplitude(medium.pre_wall_offset, pulse, response, medium);
  if (depths) {
    const double a_ant = echo_amplitude(depths->anterior, pulse, response, medium);
    const double a_post = echo_amplitude(depths->posterior, pulse, response, medium);
    add_echo(trace, round_trip_time(depths->anterior, c), a_ant, f0, sigma);
    add_echo(trace, round_trip_time(depths->posterior, c), a_post, f0, sigma);
    reference = a_ant;
  }

  if (noise_snr_db) {
    const double rms = reference / std::pow(10.0, *noise_snr_db / 20.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, rms);
    for (double& v : trace.samples) v += noise(rng);
  }
  return trace;
}

void write_trace_text(std::ostream& out, const EchoTrace& trace) {
  out << kTraceHeader << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    out << trace.time_at(i) << ' ' << trace.samples[i] << '\n';
  }
}

EchoTrace read_trace_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ConfigError("trace text must start with '" + std::string(kTraceHeader) + "'");
  }
  std::vector<double> times;
  EchoTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double t = 0.0, v = 0.0;
    if (!(row >> t >> v)) throw ConfigError("malformed trace line: " + line);
    times.push_back(t);
    trace.samples.push_back(v);
  }
  if (!times.empty()) trace.start_time = times.front();
  if (times.size() > 1) {
    trace.sample_rate = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  }
  return trace;
}

}  // namespace ubvm
