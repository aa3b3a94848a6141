#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vocseq {

/// One configuration key with its default. Defaults follow the paper's audio
/// preprocessing table; everything else is the artifact's documented choice.
struct ConfigKey {
  std::string section;
  std::string key;
  std::string default_value;
  std::string description;
};

inline const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> kRegistry = {
      {"run", "master_seed", "12345", "master seed; every stage derives its own stream from it"},
      {"io", "workdir", "work", "directory for all pipeline artifacts"},
      {"io", "annotations", "", "annotation CSV for ingest (empty: use synth fixture)"},
      {"io", "audio_dir", "", "base directory for wav paths in the annotation CSV"},

      {"audio", "sr", "250000", "expected sample rate (Hz)"},
      {"audio", "low_freq", "256", "bandpass low cutoff (Hz)"},
      {"audio", "high_freq", "120000", "bandpass high cutoff (Hz)"},
      {"audio", "pre_emphasis", "0.97", "pre-emphasis coefficient"},
      {"audio", "n_fft", "2048", "STFT FFT size"},
      {"audio", "win_length", "1024", "STFT window length"},
      {"audio", "hop_length", "256", "STFT hop length"},
      {"audio", "fmin", "256", "mel filterbank low edge (Hz)"},
      {"audio", "fmax", "120000", "mel filterbank high edge (Hz)"},
      {"audio", "n_mels", "64", "mel bins for MFCC"},
      {"audio", "n_mfcc", "13", "MFCC coefficients kept"},
      {"audio", "apply_bandpass", "true", "bandpass recordings before analysis"},
      {"audio", "apply_noise_reduce", "true", "spectral-gating noise removal before analysis"},
      {"audio", "apply_pre_emphasis", "true", "pre-emphasis before feature extraction"},

      {"noise", "time_constant_s", "0.2", "noise-floor smoothing time constant (s)"},
      {"noise", "time_mask_smooth_ms", "5", "mask smoothing along time (ms)"},
      {"noise", "freq_mask_smooth_hz", "256", "mask smoothing along frequency (Hz)"},
      {"noise", "stationary", "false", "reserved; the gate is non-stationary"},
      {"noise", "threshold_stds", "1.5", "gate threshold above the floor (standard deviations)"},

      {"coarse", "fft_size", "8192", "coarse mel samples per frame"},
      {"coarse", "hop_size", "8192", "coarse mel samples to step (equal to the frame)"},
      {"coarse", "fft_length", "16384", "coarse mel FFT size (frame zero-padded)"},
      {"coarse", "n_mels", "32", "coarse mel bins"},
      {"coarse", "f_min", "500", "coarse mel low edge (Hz)"},
      {"coarse", "f_max", "120000", "coarse mel high edge (Hz)"},
      {"coarse", "n_frames", "6", "coarse mel frames (pad or center-truncate)"},

      {"segment", "db_delta", "5", "threshold step (dB)"},
      {"segment", "ref_level_db", "20", "first threshold: dB below envelope peak"},
      {"segment", "min_level_db", "-60", "lowest threshold relative to peak (dB)"},
      {"segment", "silence_threshold", "0.1", "minimum sub-threshold time fraction"},
      {"segment", "min_silence_for_spec", "0.1", "shortest expected silence (s); carried for config parity"},
      {"segment", "max_vocal_for_spec", "1", "longest allowed supra-threshold span (s)"},
      {"segment", "min_syllable_length_s", "0.01", "segments shorter than this are dropped"},
      {"segment", "spectral_range_lo", "2000", "envelope restricted above this frequency (Hz)"},
      {"segment", "spectral_range_hi", "60000", "envelope restricted below this frequency (Hz)"},
      {"segment", "use_annotated_units", "true", "segment inside annotated units instead of whole recordings"},

      {"label", "cluster_quantile", "0.05", "agglomerative cut at this off-diagonal distance quantile"},
      {"label", "linkage", "average", "linkage: average | single | complete"},
      {"label", "dtw_band", "0", "Sakoe-Chiba half-width in frames (0 = unconstrained)"},
      {"label", "dtw_workers", "1", "worker threads for pairwise DTW"},
      {"label", "per_emitter", "true", "cluster each emitter separately"},
      {"label", "top_emitters", "0", "restrict labeling to the N emitters with most syllables (0 = all)"},
      {"label", "pca_k", "2", "PCA components for the coarse-mel projection (0 = off)"},

      {"seq", "alpha", "0.5", "add-alpha smoothing for the context model"},

      {"maxrep", "min_support", "50", "minimum occurrence count entering MR statistics"},
      {"maxrep", "min_length", "1", "minimum repeat length entering MR statistics"},
      {"maxrep", "per_emitter", "false", "extract repeats per emitter instead of pooled per context"},

      {"stats", "xmin", "1", "tail cutoff for the distribution fits"},
      {"stats", "xmin_scan", "false", "pick xmin by KS minimization instead"},

      {"classify", "n_trees", "300", "random-forest trees"},
      {"classify", "mtry", "5", "candidate features per split"},
      {"classify", "min_samples_leaf", "1", "minimum training rows per leaf"},
      {"classify", "k_folds", "5", "stratified cross-validation folds"},
      {"classify", "corpus_level_shuffle", "false", "HP1 permutes across the corpus instead of within sequences"},

      {"netgraph", "n_rand", "20", "reference rewirings/latticizations per graph"},

      {"synth", "kind", "associative", "fixture: associative | combinatorial | markov | planted | audio"},
      {"synth", "n_contexts", "4", "contexts in generated corpora"},
      {"synth", "alphabet", "8", "alphabet size for generated corpora"},
      {"synth", "n_seqs", "800", "sequences in generated corpora"},
      {"synth", "len_lo", "40", "minimum sequence length"},
      {"synth", "len_hi", "60", "maximum sequence length"},
      {"synth", "motif_len", "8", "planted motif length"},
      {"synth", "n_insertions", "60", "planted motif insertions"},
      {"synth", "n_recordings", "6", "audio fixture: recordings to generate"},
      {"synth", "tone_hz", "40000", "audio fixture: burst tone frequency (Hz)"},
      {"synth", "noise_rms", "0.001", "audio fixture: background noise RMS"},
  };
  return kRegistry;
}

/// Sectioned key=value configuration. Unknown sections or keys are rejected;
/// missing keys fall back to the registry defaults.
class PipelineConfig {
 public:
  PipelineConfig() {
    for (const auto& k : config_registry()) values_[k.section + "." + k.key] = k.default_value;
  }

  static PipelineConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    PipelineConfig cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      line_no++;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error("config: " + path + ":" + std::to_string(line_no) + ": expected key=value");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      const std::string full = section + "." + key;
      if (cfg.values_.find(full) == cfg.values_.end()) {
        throw std::runtime_error("config: " + path + ":" + std::to_string(line_no) + ": unknown key '" + full +
                                 "'");
      }
      cfg.values_[full] = value;
    }
    return cfg;
  }

  void set(const std::string& full_key, const std::string& value) {
    if (values_.find(full_key) == values_.end()) {
      throw std::runtime_error("config: unknown key '" + full_key + "'");
    }
    values_[full_key] = value;
  }

  const std::string& get(const std::string& full_key) const {
    const auto it = values_.find(full_key);
    if (it == values_.end()) throw std::runtime_error("config: unknown key '" + full_key + "'");
    return it->second;
  }

  double get_double(const std::string& k) const { return std::stod(get(k)); }
  int get_int(const std::string& k) const { return std::stoi(get(k)); }
  std::int64_t get_i64(const std::string& k) const { return std::stoll(get(k)); }
  std::uint64_t get_u64(const std::string& k) const { return std::stoull(get(k)); }

  bool get_bool(const std::string& k) const {
    std::string v = get(k);
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: key '" + k + "' is not a boolean: " + v);
  }

  /// Full key -> value map (stable order), used by report provenance.
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Human-readable reference of every key with its default, for --help.
inline std::string config_reference() {
  std::ostringstream out;
  std::string section;
  for (const auto& k : config_registry()) {
    if (k.section != section) {
      section = k.section;
      out << "\n[" << section << "]\n";
    }
    out << "  " << k.key << " = " << (k.default_value.empty() ? "<unset>" : k.default_value) << "\n      "
        << k.description << "\n";
  }
  return out.str();
}

}  // namespace vocseq
