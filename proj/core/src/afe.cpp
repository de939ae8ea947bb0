#include "ubvm/afe.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ubvm {

void ReceiverConfig::validate() const {
  if (!(gain > 0.0) || !std::isfinite(gain)) throw ParameterError("receiver gain must be > 0");
  if (!(lpf_cutoff > 0.0) || !std::isfinite(lpf_cutoff)) throw ParameterError("cut-off must be > 0");
  if (!(0.0 < threshold_fall && threshold_fall < threshold_rise && threshold_rise < v_supply)) {
    throw ParameterError("thresholds must satisfy 0 < fall < rise < supply");
  }
  if (!(tick_rate > 0.0) || !std::isfinite(tick_rate)) throw ParameterError("tick rate must be > 0");
  if (capture_depth == 0) throw ParameterError("capture depth must be > 0");
}

SchmittLevels schmitt_levels(double v_supply, double r_divider, double r_feedback) {
  // Thevenin equivalent of the divider: v_supply / 2 behind r_divider / 2.
  const double v_th = v_supply / 2.0;
  const double r_th = r_divider / 2.0;
  const double k = r_th / (r_th + r_feedback);
  return {v_th + (v_supply - v_th) * k, v_th - v_th * k};
}

EchoTrace amplify_and_filter(const EchoTrace& trace, const ReceiverConfig& cfg) {
  cfg.validate();
  if (!(trace.sample_rate >= 4.0 * cfg.lpf_cutoff)) {
    throw ParameterError("sample rate must be at least 4x the filter cut-off");
  }
  const double k = std::tan(std::numbers::pi * cfg.lpf_cutoff / trace.sample_rate);
  const double b0 = k / (1.0 + k);
  const double a1 = (k - 1.0) / (k + 1.0);

  EchoTrace out;
  out.sample_rate = trace.sample_rate;
  out.start_time = trace.start_time;
  out.samples.resize(trace.samples.size());
  double x_prev = 0.0;
  double y_prev = 0.0;
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const double x = cfg.gain * trace.samples[i];
    const double y = b0 * (x + x_prev) - a1 * y_prev;
    out.samples[i] = y;
    x_prev = x;
    y_prev = y;
  }
  return out;
}

EchoTrace add_bias(const EchoTrace& trace, double bias) {
  EchoTrace out = trace;
  for (double& v : out.samples) v += bias;
  return out;
}

BinaryWaveform comparator(const EchoTrace& trace, const ReceiverConfig& cfg) {
  cfg.validate();
  BinaryWaveform out;
  out.sample_rate = trace.sample_rate;
  out.start_time = trace.start_time;
  out.level.resize(trace.samples.size());
  bool high = false;
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const double v = trace.samples[i];
    if (!high && v >= cfg.threshold_rise) {
      high = true;
    } else if (high && v <= cfg.threshold_fall) {
      high = false;
    }
    out.level[i] = high ? 1 : 0;
  }
  return out;
}

EdgeTimestamps capture_timestamps(const BinaryWaveform& wave, double tick_rate,
                                  std::size_t capture_depth) {
  if (!(tick_rate > 0.0) || !std::isfinite(tick_rate)) throw ParameterError("tick rate must be > 0");
  EdgeTimestamps edges;
  edges.tick_rate = tick_rate;
  std::uint8_t prev = 0;
  for (std::size_t i = 0; i < wave.level.size(); ++i) {
    const std::uint8_t cur = wave.level[i];
    if (cur && !prev) {
      const auto tick = static_cast<std::int64_t>(std::floor(wave.time_at(i) * tick_rate));
      if (!edges.rising_edges.empty() && edges.rising_edges.back() >= tick) {
        prev = cur;
        continue;
      }
      if (edges.rising_edges.size() == capture_depth) {
        throw CaptureOverflowError("capture buffer of " + std::to_string(capture_depth) +
                                       " edges overflowed",
                                   std::move(edges));
      }
      edges.rising_edges.push_back(tick);
    }
    prev = cur;
  }
  return edges;
}

ChannelCapture receive(const EchoTrace& trace, const ReceiverConfig& cfg) {
  const BinaryWaveform wave = comparator(add_bias(amplify_and_filter(trace, cfg), cfg.bias), cfg);
  try {
    return {capture_timestamps(wave, cfg.tick_rate, cfg.capture_depth), false};
  } catch (const CaptureOverflowError& e) {
    return {e.captured(), true};
  }
}

}  // namespace ubvm
