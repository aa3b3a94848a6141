#pragma once

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace vocseq {

struct AudioClip {
  std::vector<double> samples;
  double sample_rate = 250000.0;
};

inline void validate_clip(const AudioClip& clip) {
  if (clip.sample_rate <= 0.0) throw std::invalid_argument("audio: sample_rate must be positive");
  for (double s : clip.samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("audio: non-finite sample");
  }
}

// ---------------------------------------------------------------------------
// Pre-emphasis
// ---------------------------------------------------------------------------

/// y[0] = x[0]; y[t] = x[t] - coeff * x[t-1].
inline AudioClip pre_emphasis(const AudioClip& clip, double coeff) {
  if (coeff < 0.0 || coeff >= 1.0) throw std::invalid_argument("pre_emphasis: coeff must be in [0, 1)");
  validate_clip(clip);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(clip.samples.size());
  if (clip.samples.empty()) return out;
  out.samples[0] = clip.samples[0];
  for (std::size_t t = 1; t < clip.samples.size(); ++t) {
    out.samples[t] = clip.samples[t] - coeff * clip.samples[t - 1];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Butterworth bandpass applied forward-backward (zero phase)
// ---------------------------------------------------------------------------

struct Biquad {
  double b0, b1, b2;  // numerator
  double a1, a2;      // denominator (a0 == 1)
};

namespace detail {

/// Analog Butterworth prototype -> bandpass transform -> bilinear transform,
/// returned as second-order sections. Gain is normalized to 1 at the warped
/// geometric center frequency.
inline std::vector<Biquad> butterworth_bandpass_sos(double low_hz, double high_hz, double fs, int order = 5) {
  using cd = std::complex<double>;
  const double k = 2.0 * fs;  // bilinear constant
  const double wl = k * std::tan(M_PI * low_hz / fs);
  const double wh = k * std::tan(M_PI * high_hz / fs);
  const double w0 = std::sqrt(wl * wh);
  const double bw = wh - wl;

  // prototype lowpass poles on the unit circle, left half-plane
  std::vector<cd> proto;
  for (int m = 0; m < order; ++m) {
    const double theta = M_PI * (2.0 * m + order + 1.0) / (2.0 * order);
    proto.emplace_back(std::cos(theta), std::sin(theta));
  }
  // bandpass transform s -> (s^2 + w0^2)/(bw * s): each prototype pole yields
  // the two roots of s^2 - bw*p*s + w0^2
  std::vector<cd> poles;
  for (const cd& p : proto) {
    const cd b = bw * p;
    const cd disc = std::sqrt(b * b - 4.0 * w0 * w0);
    poles.push_back((b + disc) / 2.0);
    poles.push_back((b - disc) / 2.0);
  }
  // bilinear transform of poles; zeros land on z = +1 (from s=0) and z = -1
  // (from s=inf), one of each per section -> numerator z^2 - 1
  std::vector<cd> zpoles;
  for (const cd& s : poles) zpoles.push_back((k + s) / (k - s));

  std::vector<Biquad> sos;
  std::vector<bool> used(zpoles.size(), false);
  for (std::size_t i = 0; i < zpoles.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const cd zi = zpoles[i];
    if (std::abs(zi.imag()) > 1e-10) {
      // pair with the closest conjugate
      std::size_t match = zpoles.size();
      double best = 1e300;
      for (std::size_t j = i + 1; j < zpoles.size(); ++j) {
        if (used[j]) continue;
        const double d = std::abs(zpoles[j] - std::conj(zi));
        if (d < best) {
          best = d;
          match = j;
        }
      }
      if (match == zpoles.size()) throw std::logic_error("butterworth: unpaired complex pole");
      used[match] = true;
      sos.push_back({1.0, 0.0, -1.0, -2.0 * zi.real(), std::norm(zi)});
    } else {
      // collect another real pole
      std::size_t match = zpoles.size();
      for (std::size_t j = i + 1; j < zpoles.size(); ++j) {
        if (!used[j] && std::abs(zpoles[j].imag()) <= 1e-10) {
          match = j;
          break;
        }
      }
      if (match == zpoles.size()) throw std::logic_error("butterworth: unpaired real pole");
      used[match] = true;
      const double p1 = zi.real(), p2 = zpoles[match].real();
      sos.push_back({1.0, 0.0, -1.0, -(p1 + p2), p1 * p2});
    }
  }

  // normalize |H| to 1 at the digital frequency that warps to w0
  const double wc = 2.0 * std::atan(w0 / k);
  const cd z = std::polar(1.0, wc);
  const cd zinv = 1.0 / z;
  cd h(1.0, 0.0);
  for (const auto& s : sos) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) / (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  }
  const double gain = 1.0 / std::abs(h);
  sos.front().b0 *= gain;
  sos.front().b1 *= gain;
  sos.front().b2 *= gain;
  return sos;
}

inline void sosfilt_inplace(const std::vector<Biquad>& sos, std::vector<double>& x,
                            const std::vector<std::array<double, 2>>* zi_unit = nullptr, double x0 = 0.0) {
  for (std::size_t si = 0; si < sos.size(); ++si) {
    const Biquad& s = sos[si];
    // direct form II transposed
    double z1 = 0.0, z2 = 0.0;
    if (zi_unit) {
      z1 = (*zi_unit)[si][0] * x0;
      z2 = (*zi_unit)[si][1] * x0;
    }
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
    if (zi_unit) x0 *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  }
}

/// Steady-state (unit step) initial conditions per section, scaled by the
/// actual edge sample at filter time to suppress startup transients.
inline std::vector<std::array<double, 2>> sosfilt_zi(const std::vector<Biquad>& sos) {
  std::vector<std::array<double, 2>> zi;
  for (const auto& s : sos) {
    const double h1 = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    zi.push_back({h1 - s.b0, s.b2 - s.a2 * h1});
  }
  return zi;
}

/// Forward-backward second-order-section filtering with odd-extension padding.
inline std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos, const std::vector<double>& x,
                                       std::size_t padlen) {
  const std::size_t n = x.size();
  if (n < 2) return x;
  padlen = std::min(padlen, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);  // odd extension
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sosfilt_zi(sos);
  sosfilt_inplace(sos, ext, &zi, ext.front());
  std::reverse(ext.begin(), ext.end());
  sosfilt_inplace(sos, ext, &zi, ext.front());
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + padlen, ext.begin() + padlen + n};
}

}  // namespace detail

/// Zero-phase band-limiting: order-5 Butterworth bandpass applied
/// forward-backward, so onsets are not shifted. Length is preserved.
inline AudioClip bandpass(const AudioClip& clip, double low_hz, double high_hz, int order = 5) {
  validate_clip(clip);
  const double nyquist = clip.sample_rate / 2.0;
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < nyquist)) {
    throw std::invalid_argument("bandpass: invalid band");
  }
  const auto sos = detail::butterworth_bandpass_sos(low_hz, high_hz, clip.sample_rate, order);
  // transients at the low band edge decay over ~1/low_hz seconds
  const std::size_t padlen =
      std::max<std::size_t>(3 * (2 * sos.size() + 1),
                            static_cast<std::size_t>(std::ceil(3.0 * clip.sample_rate / low_hz)));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples = detail::sosfiltfilt(sos, clip.samples, padlen);
  return out;
}

// ---------------------------------------------------------------------------
// FFT (FFTW, double precision). Input is copied into buffers owned by the
// plan, so results do not depend on caller alignment; plan creation is
// serialized because the FFTW planner is not thread-safe.
// ---------------------------------------------------------------------------

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    if (n < 2) throw std::invalid_argument("RealFft: n must be >= 2");
    std::lock_guard<std::mutex> lock(plan_mutex());
    in_ = fftw_alloc_real(n_);
    out_ = fftw_alloc_complex(n_ / 2 + 1);
    fwd_ = fftw_plan_dft_r2c_1d(n_, in_, out_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n_, out_, in_, FFTW_ESTIMATE);
    if (!fwd_ || !inv_) throw std::runtime_error("RealFft: plan creation failed");
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  /// Forward transform of n real samples; returns n/2+1 complex bins.
  std::vector<std::complex<double>> forward(const double* x, std::size_t len) {
    if (len > static_cast<std::size_t>(n_)) throw std::invalid_argument("RealFft: input too long");
    std::copy(x, x + len, in_);
    std::fill(in_ + len, in_ + n_, 0.0);
    fftw_execute(fwd_);
    std::vector<std::complex<double>> spec(bins());
    for (int i = 0; i < bins(); ++i) spec[i] = {out_[i][0], out_[i][1]};
    return spec;
  }

  /// Inverse transform (normalized by 1/n); returns n real samples.
  std::vector<double> inverse(const std::vector<std::complex<double>>& spec) {
    if (static_cast<int>(spec.size()) != bins()) throw std::invalid_argument("RealFft: bad spectrum size");
    for (int i = 0; i < bins(); ++i) {
      out_[i][0] = spec[i].real();
      out_[i][1] = spec[i].imag();
    }
    fftw_execute(inv_);
    std::vector<double> x(n_);
    for (int i = 0; i < n_; ++i) x[i] = in_[i] / n_;
    return x;
  }

 private:
  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan fwd_, inv_;
};

// ---------------------------------------------------------------------------
// STFT
// ---------------------------------------------------------------------------

inline std::vector<double> hann_window(int win_length) {  // periodic
  std::vector<double> w(win_length);
  for (int i = 0; i < win_length; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / win_length);
  return w;
}

/// Frame count with no centering: 1 + floor((N - win) / hop).
inline int stft_frame_count(std::size_t n_samples, int win_length, int hop_length) {
  if (n_samples < static_cast<std::size_t>(win_length)) {
    throw std::invalid_argument("stft: clip shorter than one analysis window");
  }
  return 1 + static_cast<int>((n_samples - win_length) / hop_length);
}

struct Spectrogram {
  enum class Scale { linear, mel };
  Eigen::MatrixXd values;         // dB, n_bins x n_frames
  std::vector<double> bin_freqs;  // Hz per row
  int hop = 0;                    // samples between frames
  Scale scale = Scale::linear;
  double sample_rate = 0.0;
};

/// Hann-windowed magnitude-squared STFT, bins x frames. Frames are windowed
/// over win_length samples and zero-padded to n_fft.
inline Eigen::MatrixXd stft_power(const AudioClip& clip, int n_fft, int win_length, int hop_length) {
  if (win_length > n_fft) throw std::invalid_argument("stft: win_length must be <= n_fft");
  if (hop_length < 1) throw std::invalid_argument("stft: hop_length must be >= 1");
  validate_clip(clip);
  const int n_frames = stft_frame_count(clip.samples.size(), win_length, hop_length);
  const auto window = hann_window(win_length);
  RealFft fft(n_fft);
  Eigen::MatrixXd power(fft.bins(), n_frames);
  std::vector<double> frame(win_length);
  for (int f = 0; f < n_frames; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * hop_length;
    for (int i = 0; i < win_length; ++i) frame[i] = clip.samples[start + i] * window[i];
    const auto spec = fft.forward(frame.data(), frame.size());
    for (int b = 0; b < fft.bins(); ++b) power(b, f) = std::norm(spec[b]);
  }
  return power;
}

namespace detail {

/// Power -> dB clamped at -80 dB below the matrix max, then median-subtracted.
/// An all-zero matrix becomes a uniform floor (0 after normalization).
inline Eigen::MatrixXd power_to_db_median_norm(const Eigen::MatrixXd& power) {
  const double max_p = power.maxCoeff();
  Eigen::MatrixXd db(power.rows(), power.cols());
  if (max_p <= 0.0) {
    db.setZero();
    return db;
  }
  const double floor_db = 10.0 * std::log10(max_p) - 80.0;
  for (Eigen::Index j = 0; j < power.cols(); ++j) {
    for (Eigen::Index i = 0; i < power.rows(); ++i) {
      const double p = power(i, j);
      db(i, j) = p > 0.0 ? std::max(10.0 * std::log10(p), floor_db) : floor_db;
    }
  }
  std::vector<double> flat(db.data(), db.data() + db.size());
  std::nth_element(flat.begin(), flat.begin() + flat.size() / 2, flat.end());
  double median = flat[flat.size() / 2];
  if (db.size() % 2 == 0) {
    std::nth_element(flat.begin(), flat.begin() + flat.size() / 2 - 1, flat.end());
    median = (median + flat[flat.size() / 2 - 1]) / 2.0;
  }
  db.array() -= median;
  return db;
}

}  // namespace detail

/// Median-normalized dB spectrogram (see power_to_db_median_norm).
inline Spectrogram stft_db(const AudioClip& clip, int n_fft = 2048, int win_length = 1024,
                           int hop_length = 256) {
  Spectrogram spec;
  spec.values = detail::power_to_db_median_norm(stft_power(clip, n_fft, win_length, hop_length));
  spec.hop = hop_length;
  spec.scale = Spectrogram::Scale::linear;
  spec.sample_rate = clip.sample_rate;
  spec.bin_freqs.resize(n_fft / 2 + 1);
  for (int b = 0; b <= n_fft / 2; ++b) spec.bin_freqs[b] = static_cast<double>(b) * clip.sample_rate / n_fft;
  return spec;
}

// ---------------------------------------------------------------------------
// Mel filterbank and MFCC
// ---------------------------------------------------------------------------

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelFilterbank {
  Eigen::MatrixXd weights;  // n_mels x (n_fft/2 + 1), triangular rows with peak 1
  std::vector<double> center_freqs;
};

inline MelFilterbank mel_filterbank(int n_mels, int n_fft, double sample_rate, double fmin, double fmax) {
  if (n_mels < 1) throw std::invalid_argument("mel_filterbank: n_mels must be >= 1");
  if (!(0.0 <= fmin && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw std::invalid_argument("mel_filterbank: need 0 <= fmin < fmax <= nyquist");
  }
  const int n_bins = n_fft / 2 + 1;
  std::vector<double> mel_pts(n_mels + 2);
  const double m_lo = hz_to_mel(fmin), m_hi = hz_to_mel(fmax);
  for (int i = 0; i < n_mels + 2; ++i) mel_pts[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_mels + 1));
  MelFilterbank fb;
  fb.weights = Eigen::MatrixXd::Zero(n_mels, n_bins);
  fb.center_freqs.assign(mel_pts.begin() + 1, mel_pts.end() - 1);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = mel_pts[m], mid = mel_pts[m + 1], hi = mel_pts[m + 2];
    for (int b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f < hi) {
        w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      }
      fb.weights(m, b) = w;
    }
  }
  return fb;
}

/// Orthonormal DCT-II matrix (n_out x n_in), applied along the mel axis.
inline Eigen::MatrixXd dct_ii_matrix(int n_out, int n_in) {
  Eigen::MatrixXd d(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (int n = 0; n < n_in; ++n) {
      d(k, n) = scale * std::cos(M_PI * (n + 0.5) * k / n_in);
    }
  }
  return d;
}

struct MfccMatrix {
  Eigen::MatrixXd coeffs;  // n_coeffs x n_frames
};

struct MfccParams {
  int n_fft = 2048;
  int win_length = 1024;
  int hop_length = 256;
  int n_mels = 64;
  int n_coeffs = 13;
  double fmin = 256.0;
  double fmax = 120000.0;
};

/// Log-mel spectrogram (triangular filterbank over the STFT band) followed by
/// DCT-II along the mel axis, first n_coeffs retained.
inline MfccMatrix mfcc(const AudioClip& clip, const MfccParams& params = {}) {
  if (params.n_coeffs > params.n_mels) throw std::invalid_argument("mfcc: n_coeffs must be <= n_mels");
  const Eigen::MatrixXd power = stft_power(clip, params.n_fft, params.win_length, params.hop_length);
  const auto fb = mel_filterbank(params.n_mels, params.n_fft, clip.sample_rate, params.fmin, params.fmax);
  Eigen::MatrixXd mel_power = fb.weights * power;
  const Eigen::MatrixXd mel_db = detail::power_to_db_median_norm(mel_power);
  MfccMatrix out;
  out.coeffs = dct_ii_matrix(params.n_coeffs, params.n_mels) * mel_db;
  return out;
}

// ---------------------------------------------------------------------------
// Coarse 32 x 6 mel representation of one segment
// ---------------------------------------------------------------------------

struct CoarseMelParams {
  int fft_size = 8192;     // samples per frame
  int hop_size = 8192;     // hop equal to the frame: no overlap
  int fft_length = 16384;  // zero-padded FFT size
  int n_mels = 32;
  double fmin = 500.0;
  double fmax = 120000.0;
  int n_frames = 6;
};

/// Non-overlapping coarse mel frames, padded at the end with the dB floor or
/// center-truncated in time to exactly n_frames columns.
inline Eigen::MatrixXd coarse_mel(const AudioClip& clip, const CoarseMelParams& params = {}) {
  validate_clip(clip);
  if (clip.samples.empty()) throw std::invalid_argument("coarse_mel: empty clip");
  AudioClip padded = clip;
  if (padded.samples.size() < static_cast<std::size_t>(params.fft_size)) {
    padded.samples.resize(params.fft_size, 0.0);
  }
  const Eigen::MatrixXd power = stft_power(padded, params.fft_length, params.fft_size, params.hop_size);
  const auto fb = mel_filterbank(params.n_mels, params.fft_length, clip.sample_rate, params.fmin, params.fmax);
  Eigen::MatrixXd mel_db = detail::power_to_db_median_norm(fb.weights * power);

  const int frames = static_cast<int>(mel_db.cols());
  Eigen::MatrixXd out(params.n_mels, params.n_frames);
  if (frames == params.n_frames) {
    out = mel_db;
  } else if (frames > params.n_frames) {
    const int start = (frames - params.n_frames) / 2;  // center truncation
    out = mel_db.middleCols(start, params.n_frames);
  } else {
    const double floor_db = mel_db.minCoeff();
    out.setConstant(floor_db);
    out.leftCols(frames) = mel_db;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Non-stationary noise reduction by spectral gating
// ---------------------------------------------------------------------------

struct NoiseReduceParams {
  double time_constant_s = 0.2;       // noise-floor smoothing time constant
  double time_mask_smooth_ms = 5.0;   // mask smoothing along time
  double freq_mask_smooth_hz = 256.0; // mask smoothing along frequency
  double threshold_stds = 1.5;        // gate at floor + k standard deviations
  int n_fft = 2048;
  int win_length = 1024;
  int hop_length = 256;
};

namespace detail {

// boxcar moving average along each row (axis 0) or column (axis 1)
inline Eigen::MatrixXd boxcar_smooth(const Eigen::MatrixXd& m, int width, bool along_rows) {
  if (width <= 1) return m;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  const int half = width / 2;
  if (along_rows) {  // smooth along columns index (time) for each row
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, j - half);
        const Eigen::Index hi = std::min<Eigen::Index>(m.cols() - 1, j + half);
        out(i, j) = m.row(i).segment(lo, hi - lo + 1).mean();
      }
    }
  } else {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min<Eigen::Index>(m.rows() - 1, i + half);
        out(i, j) = m.col(j).segment(lo, hi - lo + 1).mean();
      }
    }
  }
  return out;
}

}  // namespace detail

/// Spectral gating: a per-bin noise floor is estimated by bidirectional
/// exponential smoothing of the dB spectrogram over time; bins above
/// floor + threshold_stds * sigma are kept, the binary mask is smoothed over
/// frequency and time, applied to the complex STFT, and the signal is
/// rebuilt by weighted overlap-add. Output length equals input length.
inline AudioClip noise_reduce(const AudioClip& clip, const NoiseReduceParams& params = {}) {
  validate_clip(clip);
  if (params.time_constant_s <= 0.0 || params.time_mask_smooth_ms <= 0.0 || params.freq_mask_smooth_hz <= 0.0 ||
      params.threshold_stds <= 0.0) {
    throw std::invalid_argument("noise_reduce: params must be positive");
  }
  const int win = params.win_length, hop = params.hop_length, n_fft = params.n_fft;
  const std::size_t n = clip.samples.size();
  if (n < static_cast<std::size_t>(win)) throw std::invalid_argument("noise_reduce: clip shorter than one frame");

  // analysis over a zero-padded copy so the tail is covered
  const int n_frames = 1 + static_cast<int>((n - 1) / hop);
  std::vector<double> padded(static_cast<std::size_t>(n_frames - 1) * hop + win, 0.0);
  std::copy(clip.samples.begin(), clip.samples.end(), padded.begin());

  const auto window = hann_window(win);
  RealFft fft(n_fft);
  const int bins = fft.bins();
  std::vector<std::vector<std::complex<double>>> frames(n_frames);
  Eigen::MatrixXd power_db(bins, n_frames);
  std::vector<double> frame(win);
  for (int f = 0; f < n_frames; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * hop;
    for (int i = 0; i < win; ++i) frame[i] = padded[start + i] * window[i];
    frames[f] = fft.forward(frame.data(), frame.size());
    for (int b = 0; b < bins; ++b) {
      power_db(b, f) = 10.0 * std::log10(std::norm(frames[f][b]) + 1e-300);
    }
  }

  // bidirectional exponential floor in the dB domain; the running means are
  // bias-corrected (normalized by the accumulated weight) so neither end of
  // the recording biases the estimate
  const double frame_dt = static_cast<double>(hop) / clip.sample_rate;
  const double a = std::exp(-frame_dt / params.time_constant_s);
  Eigen::MatrixXd floor_db(bins, n_frames);
  for (int b = 0; b < bins; ++b) {
    std::vector<double> fwd_vals(n_frames);
    double acc = 0.0, weight = 0.0;
    for (int f = 0; f < n_frames; ++f) {
      acc = a * acc + (1.0 - a) * power_db(b, f);
      weight = a * weight + (1.0 - a);
      fwd_vals[f] = acc / weight;
    }
    acc = 0.0;
    weight = 0.0;
    for (int f = n_frames - 1; f >= 0; --f) {
      acc = a * acc + (1.0 - a) * power_db(b, f);
      weight = a * weight + (1.0 - a);
      floor_db(b, f) = 0.5 * (fwd_vals[f] + acc / weight);
    }
  }

  // binary gate at floor + k * sigma, then smooth to a soft mask
  Eigen::MatrixXd mask(bins, n_frames);
  for (int b = 0; b < bins; ++b) {
    double s1 = 0.0, s2 = 0.0;
    for (int f = 0; f < n_frames; ++f) {
      const double r = power_db(b, f) - floor_db(b, f);
      s1 += r;
      s2 += r * r;
    }
    const double mu = s1 / n_frames;
    const double sigma = std::sqrt(std::max(0.0, s2 / n_frames - mu * mu));
    for (int f = 0; f < n_frames; ++f) {
      const double r = power_db(b, f) - floor_db(b, f);
      mask(b, f) = r > params.threshold_stds * sigma ? 1.0 : 0.0;
    }
  }
  const double bin_hz = clip.sample_rate / n_fft;
  const int w_freq = std::max(1, static_cast<int>(std::lround(params.freq_mask_smooth_hz / bin_hz)));
  const int w_time = std::max(1, static_cast<int>(std::lround(params.time_mask_smooth_ms / 1000.0 / frame_dt)));
  mask = detail::boxcar_smooth(mask, w_freq, false);
  mask = detail::boxcar_smooth(mask, w_time, true);

  // weighted overlap-add resynthesis with the same window
  std::vector<double> acc(padded.size(), 0.0), norm(padded.size(), 0.0);
  std::vector<std::complex<double>> spec(bins);
  for (int f = 0; f < n_frames; ++f) {
    for (int b = 0; b < bins; ++b) spec[b] = frames[f][b] * mask(b, f);
    const auto rec = fft.inverse(spec);
    const std::size_t start = static_cast<std::size_t>(f) * hop;
    for (int i = 0; i < win; ++i) {
      acc[start + i] += rec[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = norm[i] > 1e-12 ? acc[i] / norm[i] : 0.0;
  }
  return out;
}

}  // namespace vocseq
