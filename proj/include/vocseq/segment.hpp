#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "vocseq/audio.hpp"

namespace vocseq {

struct Segment {
  std::string recording_id;
  int seg_index = 0;
  double onset_s = 0.0;
  double offset_s = 0.0;
};

struct SegmentTable {
  std::vector<Segment> rows;
  // set when the dynamic threshold search exhausted all levels without
  // satisfying the silence/vocal-length constraints
  bool warning_no_threshold = false;
};

struct DynSegParams {
  double db_delta = 5.0;
  double ref_level_db = 20.0;    // first threshold: this far below the envelope peak
  double min_level_db = -60.0;   // lowest threshold relative to the peak
  double silence_threshold = 0.1;
  double min_silence_for_spec = 0.1;  // accepted for config compatibility
  double max_vocal_for_spec = 1.0;    // seconds
  double min_syllable_length_s = 0.01;
  double spectral_range_lo = 2000.0;
  double spectral_range_hi = 60000.0;
  int n_fft = 2048;
  int win_length = 1024;
  int hop_length = 256;
  int n_mels = 64;
  double mel_fmin = 256.0;
  double mel_fmax = 120000.0;
};

namespace detail {

/// Peak-relative dB envelope: per-frame maximum of the mel power spectrogram
/// restricted to the spectral range, with a -80 dB floor.
inline std::vector<double> mel_envelope_db(const AudioClip& clip, const DynSegParams& p) {
  const Eigen::MatrixXd power = stft_power(clip, p.n_fft, p.win_length, p.hop_length);
  const auto fb = mel_filterbank(p.n_mels, p.n_fft, clip.sample_rate, p.mel_fmin, p.mel_fmax);
  const Eigen::MatrixXd mel_power = fb.weights * power;
  std::vector<int> keep;
  for (int m = 0; m < p.n_mels; ++m) {
    if (fb.center_freqs[m] >= p.spectral_range_lo && fb.center_freqs[m] <= p.spectral_range_hi) {
      keep.push_back(m);
    }
  }
  if (keep.empty()) throw std::invalid_argument("segment: spectral_range selects no mel bins");
  const int frames = static_cast<int>(mel_power.cols());
  std::vector<double> env(frames);
  double peak = 0.0;
  for (int f = 0; f < frames; ++f) {
    double mx = 0.0;
    for (int m : keep) mx = std::max(mx, mel_power(m, f));
    env[f] = mx;
    peak = std::max(peak, mx);
  }
  std::vector<double> env_db(frames);
  for (int f = 0; f < frames; ++f) {
    env_db[f] = peak > 0.0 && env[f] > 0.0 ? std::max(10.0 * std::log10(env[f] / peak), -80.0) : -80.0;
  }
  return env_db;
}

struct Span {
  int first_frame;
  int last_frame;  // inclusive
};

inline std::vector<Span> supra_threshold_spans(const std::vector<double>& env_db, double threshold) {
  std::vector<Span> spans;
  int start = -1;
  for (int f = 0; f < static_cast<int>(env_db.size()); ++f) {
    if (env_db[f] >= threshold) {
      if (start < 0) start = f;
    } else if (start >= 0) {
      spans.push_back({start, f - 1});
      start = -1;
    }
  }
  if (start >= 0) spans.push_back({start, static_cast<int>(env_db.size()) - 1});
  return spans;
}

/// Frame span -> seconds using window-center times.
inline Segment span_to_segment(const Span& s, const std::string& recording_id, int index, int win, int hop,
                               double sr) {
  Segment seg;
  seg.recording_id = recording_id;
  seg.seg_index = index;
  seg.onset_s = (static_cast<double>(s.first_frame) * hop + win / 2.0) / sr;
  seg.offset_s = (static_cast<double>(s.last_frame + 1) * hop + win / 2.0) / sr;
  return seg;
}

}  // namespace detail

/// Dynamic threshold segmentation. The threshold starts ref_level_db below
/// the envelope peak and is lowered in db_delta steps down to min_level_db;
/// the first level where (a) the sub-threshold time fraction is at least
/// silence_threshold and (b) the longest supra-threshold span is at most
/// max_vocal_for_spec seconds wins. Supra-threshold spans become segments;
/// spans shorter than min_syllable_length_s are dropped. When no level
/// satisfies the constraints an empty table with a warning flag is returned.
inline SegmentTable dynamic_threshold_segment(const AudioClip& clip, const DynSegParams& params = {},
                                              const std::string& recording_id = "rec") {
  if (params.db_delta <= 0.0) throw std::invalid_argument("segment: db_delta must be positive");
  const auto env_db = detail::mel_envelope_db(clip, params);
  const double frame_s = static_cast<double>(params.hop_length) / clip.sample_rate;
  const int frames = static_cast<int>(env_db.size());

  SegmentTable table;
  bool found = false;
  std::vector<detail::Span> chosen;
  for (double t = -params.ref_level_db; t >= params.min_level_db - 1e-9; t -= params.db_delta) {
    const auto spans = detail::supra_threshold_spans(env_db, t);
    int supra_frames = 0;
    int longest = 0;
    for (const auto& s : spans) {
      supra_frames += s.last_frame - s.first_frame + 1;
      longest = std::max(longest, s.last_frame - s.first_frame + 1);
    }
    const double silence_frac = 1.0 - static_cast<double>(supra_frames) / frames;
    if (silence_frac >= params.silence_threshold && longest * frame_s <= params.max_vocal_for_spec) {
      chosen = spans;
      found = true;
      break;
    }
  }
  if (!found) {
    table.warning_no_threshold = true;
    return table;
  }
  int index = 0;
  for (const auto& s : chosen) {
    Segment seg = detail::span_to_segment(s, recording_id, index, params.win_length, params.hop_length,
                                          clip.sample_rate);
    if (seg.offset_s - seg.onset_s >= params.min_syllable_length_s) {
      seg.seg_index = index++;
      table.rows.push_back(seg);
    }
  }
  return table;
}

/// Baseline used by the original dataset: spans where the time-domain RMS
/// envelope (per analysis frame, absolute dB) exceeds a fixed floor.
inline SegmentTable fixed_floor_segment(const AudioClip& clip, double floor_db,
                                        const DynSegParams& params = {},
                                        const std::string& recording_id = "rec") {
  if (!std::isfinite(floor_db)) throw std::invalid_argument("segment: floor_db must be finite");
  validate_clip(clip);
  const int win = params.win_length, hop = params.hop_length;
  SegmentTable table;
  if (clip.samples.size() < static_cast<std::size_t>(win)) return table;
  const int frames = stft_frame_count(clip.samples.size(), win, hop);
  std::vector<double> env_db(frames);
  for (int f = 0; f < frames; ++f) {
    double acc = 0.0;
    const std::size_t start = static_cast<std::size_t>(f) * hop;
    for (int i = 0; i < win; ++i) acc += clip.samples[start + i] * clip.samples[start + i];
    const double rms = std::sqrt(acc / win);
    env_db[f] = rms > 0.0 ? 20.0 * std::log10(rms) : -300.0;
  }
  const auto spans = detail::supra_threshold_spans(env_db, floor_db);
  int index = 0;
  for (const auto& s : spans) {
    Segment seg = detail::span_to_segment(s, recording_id, index, win, hop, clip.sample_rate);
    if (seg.offset_s - seg.onset_s >= params.min_syllable_length_s) {
      seg.seg_index = index++;
      table.rows.push_back(seg);
    }
  }
  return table;
}

}  // namespace vocseq
