#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vocseq/audio.hpp"
#include "vocseq/classify.hpp"
#include "vocseq/config.hpp"
#include "vocseq/io.hpp"
#include "vocseq/label.hpp"
#include "vocseq/maxrep.hpp"
#include "vocseq/netgraph.hpp"
#include "vocseq/segment.hpp"
#include "vocseq/seq.hpp"
#include "vocseq/stats.hpp"
#include "vocseq/synth.hpp"

namespace vocseq {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Annotation ingest
// ---------------------------------------------------------------------------

struct AnnotationRow {
  std::string recording_id;
  std::string wav_path;
  std::string emitter_id;
  std::string addressee_id;
  Context context = Context::Isolation;
  std::optional<double> onset_s;
  std::optional<double> offset_s;
};

struct AnnotationTable {
  std::vector<AnnotationRow> rows;
  std::map<std::string, std::int64_t> excluded_counts;  // context label -> rows dropped
};

inline const char* kAnnotationCsvHeader =
    "recording_id,wav_path,emitter_id,addressee_id,context,onset_s,offset_s";

/// Validates an annotation CSV: unknown contexts are an error, the ambiguous
/// ones (Generic/Sleeping/Unknown) are excluded with counts, wav paths must
/// exist, and duplicate (recording_id, onset) pairs are rejected.
inline AnnotationTable ingest(const std::string& annotations_csv, const std::string& audio_dir) {
  AnnotationTable table;
  const auto rows = read_csv(annotations_csv, kAnnotationCsvHeader);
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t row_no = 1;
  for (const auto& f : rows) {
    row_no++;
    if (f.size() != 7) {
      throw std::runtime_error("ingest: " + annotations_csv + ":" + std::to_string(row_no) +
                               ": expected 7 fields");
    }
    if (is_excluded_context(f[4])) {
      table.excluded_counts[f[4]]++;
      continue;
    }
    const auto ctx = parse_context(f[4]);
    if (!ctx) {
      throw std::runtime_error("ingest: " + annotations_csv + ":" + std::to_string(row_no) +
                               ": unknown context '" + f[4] + "'");
    }
    AnnotationRow row;
    row.recording_id = f[0];
    row.wav_path = audio_dir.empty() ? f[1] : (fs::path(audio_dir) / f[1]).string();
    row.emitter_id = f[2];
    row.addressee_id = f[3];
    row.context = *ctx;
    try {
      if (!f[5].empty()) row.onset_s = std::stod(f[5]);
      if (!f[6].empty()) row.offset_s = std::stod(f[6]);
    } catch (const std::exception&) {
      throw std::runtime_error("ingest: " + annotations_csv + ":" + std::to_string(row_no) +
                               ": malformed onset/offset");
    }
    if (row.onset_s && row.offset_s && !(*row.onset_s < *row.offset_s)) {
      throw std::runtime_error("ingest: " + annotations_csv + ":" + std::to_string(row_no) +
                               ": onset must precede offset");
    }
    if (!fs::exists(row.wav_path)) {
      throw std::runtime_error("ingest: " + annotations_csv + ":" + std::to_string(row_no) +
                               ": missing wav file " + row.wav_path);
    }
    if (!seen.insert({row.recording_id, f[5]}).second) {
      throw std::runtime_error("ingest: " + annotations_csv + ":" + std::to_string(row_no) +
                               ": duplicate recording_id+onset " + row.recording_id + "@" + f[5]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Stage plumbing: every stage reads and writes files under the workdir and
// derives its random stream from the master seed, so a full run is a pure
// function of (config, input files).
// ---------------------------------------------------------------------------

namespace detail {

inline fs::path workdir(const PipelineConfig& cfg) {
  fs::path dir(cfg.get("io.workdir"));
  fs::create_directories(dir);
  return dir;
}

inline std::string require_artifact(const PipelineConfig& cfg, const std::string& name,
                                    const std::string& producer) {
  const fs::path p = fs::path(cfg.get("io.workdir")) / name;
  if (!fs::exists(p)) {
    throw std::runtime_error("missing input " + p.string() + "; run `vocseq " + producer + "` first");
  }
  return p.string();
}

inline MfccParams mfcc_params(const PipelineConfig& cfg) {
  MfccParams p;
  p.n_fft = cfg.get_int("audio.n_fft");
  p.win_length = cfg.get_int("audio.win_length");
  p.hop_length = cfg.get_int("audio.hop_length");
  p.n_mels = cfg.get_int("audio.n_mels");
  p.n_coeffs = cfg.get_int("audio.n_mfcc");
  p.fmin = cfg.get_double("audio.fmin");
  p.fmax = cfg.get_double("audio.fmax");
  return p;
}

inline DynSegParams seg_params(const PipelineConfig& cfg) {
  DynSegParams p;
  p.db_delta = cfg.get_double("segment.db_delta");
  p.ref_level_db = cfg.get_double("segment.ref_level_db");
  p.min_level_db = cfg.get_double("segment.min_level_db");
  p.silence_threshold = cfg.get_double("segment.silence_threshold");
  p.min_silence_for_spec = cfg.get_double("segment.min_silence_for_spec");
  p.max_vocal_for_spec = cfg.get_double("segment.max_vocal_for_spec");
  p.min_syllable_length_s = cfg.get_double("segment.min_syllable_length_s");
  p.spectral_range_lo = cfg.get_double("segment.spectral_range_lo");
  p.spectral_range_hi = cfg.get_double("segment.spectral_range_hi");
  p.n_fft = cfg.get_int("audio.n_fft");
  p.win_length = cfg.get_int("audio.win_length");
  p.hop_length = cfg.get_int("audio.hop_length");
  p.n_mels = cfg.get_int("audio.n_mels");
  p.mel_fmin = cfg.get_double("audio.fmin");
  p.mel_fmax = cfg.get_double("audio.fmax");
  return p;
}

inline NoiseReduceParams noise_params(const PipelineConfig& cfg) {
  NoiseReduceParams p;
  p.time_constant_s = cfg.get_double("noise.time_constant_s");
  p.time_mask_smooth_ms = cfg.get_double("noise.time_mask_smooth_ms");
  p.freq_mask_smooth_hz = cfg.get_double("noise.freq_mask_smooth_hz");
  p.threshold_stds = cfg.get_double("noise.threshold_stds");
  p.n_fft = cfg.get_int("audio.n_fft");
  p.win_length = cfg.get_int("audio.win_length");
  p.hop_length = cfg.get_int("audio.hop_length");
  return p;
}

inline AudioClip preprocess_recording(const PipelineConfig& cfg, const AudioClip& raw) {
  AudioClip clip = raw;
  if (cfg.get_bool("audio.apply_bandpass")) {
    clip = bandpass(clip, cfg.get_double("audio.low_freq"), cfg.get_double("audio.high_freq"));
  }
  if (cfg.get_bool("audio.apply_noise_reduce")) {
    clip = noise_reduce(clip, noise_params(cfg));
  }
  return clip;
}

inline AudioClip slice_clip(const AudioClip& clip, double onset_s, double offset_s) {
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  const auto lo = static_cast<std::size_t>(std::max(0.0, onset_s) * clip.sample_rate);
  const auto hi = std::min(clip.samples.size(),
                           static_cast<std::size_t>(std::max(0.0, offset_s) * clip.sample_rate));
  if (lo < hi) out.samples.assign(clip.samples.begin() + lo, clip.samples.begin() + hi);
  return out;
}

// per-syllable MFCC matrices in one flat binary file + CSV index
struct SyllableFeatures {
  std::vector<LabelRow> meta;  // cluster_label unset at featurize time
  std::vector<MfccMatrix> mfcc;
};

inline void write_syllable_features(const fs::path& dir, const SyllableFeatures& feats) {
  std::ofstream bin(dir / "mfcc.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("featurize: cannot write " + (dir / "mfcc.bin").string());
  std::ofstream index(dir / "features_index.csv");
  index << "syllable_id,recording_id,onset_s,offset_s,emitter_id,context,n_coeffs,n_frames\n";
  for (std::size_t i = 0; i < feats.meta.size(); ++i) {
    const auto& m = feats.mfcc[i].coeffs;
    index << feats.meta[i].syllable_id << ',' << feats.meta[i].recording_id << ','
          << fmt_double(feats.meta[i].onset_s) << ',' << fmt_double(feats.meta[i].offset_s) << ','
          << feats.meta[i].emitter_id << ',' << to_string(feats.meta[i].context) << ',' << m.rows() << ','
          << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        bin.write(reinterpret_cast<const char*>(&v), 8);
      }
    }
  }
}

inline SyllableFeatures read_syllable_features(const fs::path& dir) {
  SyllableFeatures feats;
  std::ifstream bin(dir / "mfcc.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + (dir / "mfcc.bin").string());
  const auto rows = read_csv((dir / "features_index.csv").string(),
                             "syllable_id,recording_id,onset_s,offset_s,emitter_id,context,n_coeffs,n_frames");
  for (const auto& f : rows) {
    if (f.size() != 8) throw std::runtime_error("featurize index: malformed row");
    LabelRow meta;
    meta.syllable_id = f[0];
    meta.recording_id = f[1];
    meta.onset_s = std::stod(f[2]);
    meta.offset_s = std::stod(f[3]);
    meta.emitter_id = f[4];
    const auto ctx = parse_context(f[5]);
    if (!ctx) throw std::runtime_error("featurize index: unknown context " + f[5]);
    meta.context = *ctx;
    const int n_coeffs = std::stoi(f[6]);
    const int n_frames = std::stoi(f[7]);
    MfccMatrix m;
    m.coeffs.resize(n_coeffs, n_frames);
    for (int r = 0; r < n_coeffs; ++r) {
      for (int c = 0; c < n_frames; ++c) {
        double v;
        bin.read(reinterpret_cast<char*>(&v), 8);
        m.coeffs(r, c) = v;
      }
    }
    if (!bin) throw std::runtime_error("featurize: truncated mfcc.bin");
    feats.meta.push_back(std::move(meta));
    feats.mfcc.push_back(std::move(m));
  }
  return feats;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// Writes the synthetic fixture selected by [synth] kind. Symbolic kinds
/// produce sequences.jsonl directly; the audio kind produces wav files plus
/// an annotation CSV so the full audio path can run.
inline void stage_synth(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const std::string kind = cfg.get("synth.kind");
  const std::uint64_t seed = derive_seed(cfg.get_u64("run.master_seed"), "synth");
  const int n_contexts = cfg.get_int("synth.n_contexts");
  const int alphabet = cfg.get_int("synth.alphabet");
  const int n_seqs = cfg.get_int("synth.n_seqs");
  const int len_lo = cfg.get_int("synth.len_lo");
  const int len_hi = cfg.get_int("synth.len_hi");

  if (kind == "associative" || kind == "combinatorial") {
    const auto mode = kind == "associative" ? CorpusMode::associative : CorpusMode::combinatorial;
    const auto corpus = gen_context_corpus(mode, n_contexts, alphabet, n_seqs, len_lo, len_hi, seed);
    write_sequences_jsonl((dir / "sequences.jsonl").string(), corpus.seqs);
    return;
  }
  if (kind == "markov") {
    const int k = alphabet;
    std::vector<std::vector<double>> p(k, std::vector<double>(k, 1.0 / k));
    const auto seqs = gen_markov(p, std::vector<double>(k, 1.0 / k), n_seqs, len_lo, len_hi, seed);
    write_sequences_jsonl((dir / "sequences.jsonl").string(), seqs);
    return;
  }
  if (kind == "planted") {
    // conflict-style context with planted motifs vs cooperative background
    const int motif_len = cfg.get_int("synth.motif_len");
    const int n_ins = cfg.get_int("synth.n_insertions");
    auto conflict = gen_planted_repeats(alphabet, motif_len, n_ins, derive_seed(seed, "conflict"),
                                        n_seqs / 2, len_hi * 10, Context::Fighting);
    auto coop = gen_planted_repeats(alphabet, motif_len, 0, derive_seed(seed, "coop"), n_seqs / 2,
                                    len_hi * 10, Context::Grooming);
    auto seqs = conflict.seqs;
    seqs.insert(seqs.end(), coop.seqs.begin(), coop.seqs.end());
    write_sequences_jsonl((dir / "sequences.jsonl").string(), seqs);
    return;
  }
  if (kind == "audio") {
    const fs::path audio_dir = dir / "audio";
    fs::create_directories(audio_dir);
    const int n_recordings = cfg.get_int("synth.n_recordings");
    const double sr = cfg.get_double("audio.sr");
    const double tone_hz = cfg.get_double("synth.tone_hz");
    const double noise_rms = cfg.get_double("synth.noise_rms");
    std::ofstream ann(dir / "annotations.csv");
    ann << kAnnotationCsvHeader << "\n";
    for (int r = 0; r < n_recordings; ++r) {
      Rng rng(derive_seed(seed, "audio", r));
      AudioSynthSpec spec;
      spec.duration_s = 0.3;
      spec.noise_rms = noise_rms;
      double t = 0.04 + 0.01 * rng.uniform();
      const int n_bursts = 3;
      for (int b = 0; b < n_bursts; ++b) {
        const double dur = 0.02 + 0.015 * rng.uniform();
        spec.bursts.push_back({t, dur, tone_hz * (0.8 + 0.4 * rng.uniform()), 0.4 + 0.2 * rng.uniform()});
        t += dur + 0.05 + 0.02 * rng.uniform();
      }
      const auto clip = gen_test_audio(spec, sr, derive_seed(seed, "audio-noise", r));
      const std::string name = "rec" + std::to_string(r);
      write_wav((audio_dir / (name + ".wav")).string(), clip);
      const Context ctx = kAllContexts[r % 4];
      const std::string emitter = "bat" + std::to_string(r % 2);
      ann << name << ",audio/" << name << ".wav," << emitter << ",bat9," << to_string(ctx) << ",,\n";
    }
    return;
  }
  throw std::runtime_error("synth: unknown kind '" + kind + "'");
}

inline void stage_ingest(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  std::string annotations = cfg.get("io.annotations");
  std::string audio_dir = cfg.get("io.audio_dir");
  if (annotations.empty()) {  // fall back to the synth fixture
    annotations = detail::require_artifact(cfg, "annotations.csv", "synth");
    audio_dir = dir.string();
  }
  const auto table = ingest(annotations, audio_dir);
  std::ofstream out(dir / "ingested.csv");
  out << kAnnotationCsvHeader << "\n";
  for (const auto& r : table.rows) {
    out << r.recording_id << ',' << r.wav_path << ',' << r.emitter_id << ',' << r.addressee_id << ','
        << to_string(r.context) << ',' << (r.onset_s ? fmt_double(*r.onset_s) : "") << ','
        << (r.offset_s ? fmt_double(*r.offset_s) : "") << "\n";
  }
  json report;
  report["n_ingested"] = table.rows.size();
  json excluded = json::object();
  std::int64_t total_excluded = 0;
  for (const auto& [label, count] : table.excluded_counts) {
    excluded[label] = count;
    total_excluded += count;
  }
  report["n_excluded"] = total_excluded;
  report["excluded_by_context"] = excluded;
  write_text_file((dir / "ingest_report.json").string(), report.dump(2) + "\n");
}

namespace detail {

inline std::vector<AnnotationRow> read_ingested(const PipelineConfig& cfg) {
  const auto path = require_artifact(cfg, "ingested.csv", "ingest");
  std::vector<AnnotationRow> rows;
  for (const auto& f : read_csv(path, kAnnotationCsvHeader)) {
    AnnotationRow r;
    r.recording_id = f[0];
    r.wav_path = f[1];
    r.emitter_id = f[2];
    r.addressee_id = f[3];
    const auto ctx = parse_context(f[4]);
    if (!ctx) throw std::runtime_error("ingested.csv: unknown context " + f[4]);
    r.context = *ctx;
    if (!f[5].empty()) r.onset_s = std::stod(f[5]);
    if (!f[6].empty()) r.offset_s = std::stod(f[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace detail

inline void stage_segment(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto rows = detail::read_ingested(cfg);
  const auto params = detail::seg_params(cfg);
  const bool use_units = cfg.get_bool("segment.use_annotated_units");
  std::vector<Segment> all;
  bool any_warning = false;
  for (const auto& r : rows) {
    const AudioClip raw = read_wav(r.wav_path);
    const AudioClip pre = detail::preprocess_recording(cfg, raw);
    AudioClip target = pre;
    double base_offset = 0.0;
    if (use_units && r.onset_s && r.offset_s) {
      target = detail::slice_clip(pre, *r.onset_s, *r.offset_s);
      base_offset = *r.onset_s;
    }
    auto table = dynamic_threshold_segment(target, params, r.recording_id);
    any_warning = any_warning || table.warning_no_threshold;
    for (auto seg : table.rows) {
      seg.onset_s += base_offset;
      seg.offset_s += base_offset;
      seg.seg_index = static_cast<int>(all.size());
      all.push_back(seg);
    }
  }
  // annotated units may be listed in any order; the table is per-recording sorted
  std::stable_sort(all.begin(), all.end(), [](const Segment& x, const Segment& y) {
    if (x.recording_id != y.recording_id) return x.recording_id < y.recording_id;
    return x.onset_s < y.onset_s;
  });
  std::map<std::string, int> next_index;
  for (auto& seg : all) seg.seg_index = next_index[seg.recording_id]++;
  write_segment_csv((dir / "segments.csv").string(), all);
  if (any_warning) {
    write_text_file((dir / "segment_warnings.txt").string(),
                    "dynamic threshold search failed for at least one recording\n");
  }
}

inline void stage_featurize(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto rows = detail::read_ingested(cfg);
  const auto segments = read_segment_csv(detail::require_artifact(cfg, "segments.csv", "segment"));
  std::map<std::string, const AnnotationRow*> by_recording;
  for (const auto& r : rows) by_recording[r.recording_id] = &r;

  const auto mfcc_p = detail::mfcc_params(cfg);
  const double pre_coeff = cfg.get_bool("audio.apply_pre_emphasis") ? cfg.get_double("audio.pre_emphasis") : 0.0;
  detail::SyllableFeatures feats;
  Eigen::MatrixXd coarse_rows;  // one flattened 32x6 coarse mel per syllable
  std::vector<std::string> coarse_ids;
  std::string current_recording;
  AudioClip current_clip;
  for (const auto& seg : segments) {
    const auto it = by_recording.find(seg.recording_id);
    if (it == by_recording.end()) {
      throw std::runtime_error("featurize: segment references unknown recording " + seg.recording_id);
    }
    if (seg.recording_id != current_recording) {
      current_recording = seg.recording_id;
      current_clip = detail::preprocess_recording(cfg, read_wav(it->second->wav_path));
      if (pre_coeff > 0.0) current_clip = pre_emphasis(current_clip, pre_coeff);
    }
    AudioClip syllable = detail::slice_clip(current_clip, seg.onset_s, seg.offset_s);
    if (syllable.samples.size() < static_cast<std::size_t>(mfcc_p.win_length)) {
      syllable.samples.resize(mfcc_p.win_length, 0.0);  // very short syllables: pad to one frame
    }
    LabelRow meta;
    meta.syllable_id = seg.recording_id + "#" + std::to_string(seg.seg_index);
    meta.recording_id = seg.recording_id;
    meta.onset_s = seg.onset_s;
    meta.offset_s = seg.offset_s;
    meta.emitter_id = it->second->emitter_id;
    meta.context = it->second->context;
    feats.meta.push_back(meta);
    feats.mfcc.push_back(mfcc(syllable, mfcc_p));

    CoarseMelParams cp;
    cp.fft_size = cfg.get_int("coarse.fft_size");
    cp.hop_size = cfg.get_int("coarse.hop_size");
    cp.fft_length = cfg.get_int("coarse.fft_length");
    cp.n_mels = cfg.get_int("coarse.n_mels");
    cp.fmin = cfg.get_double("coarse.f_min");
    cp.fmax = cfg.get_double("coarse.f_max");
    cp.n_frames = cfg.get_int("coarse.n_frames");
    const Eigen::MatrixXd cm = coarse_mel(syllable, cp);
    if (coarse_rows.size() == 0) coarse_rows.resize(0, cm.size());
    coarse_rows.conservativeResize(coarse_rows.rows() + 1, cm.size());
    Eigen::Index at = 0;
    for (Eigen::Index c = 0; c < cm.cols(); ++c) {
      for (Eigen::Index r = 0; r < cm.rows(); ++r) coarse_rows(coarse_rows.rows() - 1, at++) = cm(r, c);
    }
    coarse_ids.push_back(meta.syllable_id);
  }
  detail::write_syllable_features(dir, feats);

  // plot-ready PCA projection of the coarse representation
  const int k = cfg.get_int("label.pca_k");
  if (k > 0 && coarse_rows.rows() >= 2 && k <= std::min<Eigen::Index>(coarse_rows.rows(), coarse_rows.cols())) {
    const auto pca = pca_project(coarse_rows, k);
    std::ofstream out(dir / "coarse_pca.csv");
    out << "syllable_id";
    for (int c = 0; c < k; ++c) out << ",pc" << (c + 1);
    out << "\n";
    for (Eigen::Index i = 0; i < pca.projected.rows(); ++i) {
      out << coarse_ids[i];
      for (int c = 0; c < k; ++c) out << ',' << fmt_double(pca.projected(i, c));
      out << "\n";
    }
  }
}

inline void stage_label(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  detail::require_artifact(cfg, "features_index.csv", "featurize");
  auto feats = detail::read_syllable_features(dir);
  if (feats.meta.empty()) throw std::runtime_error("label: no syllables to label");

  // tuning subset: the N emitters with the most syllables (ties by name)
  const int top_n = cfg.get_int("label.top_emitters");
  if (top_n > 0) {
    std::map<std::string, std::int64_t> counts;
    for (const auto& m : feats.meta) counts[m.emitter_id]++;
    std::vector<std::pair<std::int64_t, std::string>> ranked;
    for (const auto& [emitter, count] : counts) ranked.emplace_back(-count, emitter);
    std::sort(ranked.begin(), ranked.end());
    std::set<std::string> keep;
    for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(top_n); ++i) {
      keep.insert(ranked[i].second);
    }
    detail::SyllableFeatures subset;
    for (std::size_t i = 0; i < feats.meta.size(); ++i) {
      if (keep.count(feats.meta[i].emitter_id)) {
        subset.meta.push_back(feats.meta[i]);
        subset.mfcc.push_back(feats.mfcc[i]);
      }
    }
    feats = std::move(subset);
    if (feats.meta.empty()) throw std::runtime_error("label: top_emitters filter left no syllables");
  }

  const bool per_emitter = cfg.get_bool("label.per_emitter");
  const double q = cfg.get_double("label.cluster_quantile");
  const int band_cfg = cfg.get_int("label.dtw_band");
  const std::optional<int> band = band_cfg > 0 ? std::optional<int>(band_cfg) : std::nullopt;
  const int workers = cfg.get_int("label.dtw_workers");
  const std::string linkage_name = cfg.get("label.linkage");
  Linkage linkage = Linkage::average;
  if (linkage_name == "single") linkage = Linkage::single;
  else if (linkage_name == "complete") linkage = Linkage::complete;
  else if (linkage_name != "average") throw std::runtime_error("label: unknown linkage " + linkage_name);

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < feats.meta.size(); ++i) {
    groups[per_emitter ? feats.meta[i].emitter_id : std::string("all")].push_back(i);
  }

  std::vector<LabelRow> labels = feats.meta;
  json quality = json::object();
  int label_offset = 0;
  for (const auto& [group, members] : groups) {
    int n_clusters_here;
    std::vector<int> group_labels(members.size(), 0);
    if (members.size() == 1) {
      n_clusters_here = 1;
    } else {
      std::vector<MfccMatrix> items;
      std::vector<std::string> ids;
      for (auto i : members) {
        items.push_back(feats.mfcc[i]);
        ids.push_back(feats.meta[i].syllable_id);
      }
      const auto dm = pairwise_dtw(items, band, workers, ids);
      write_distance_matrix((dir / ("dtw_" + group + ".bin")).string(),
                            (dir / ("dtw_" + group + ".ids")).string(), dm);
      group_labels = agglomerative_cluster(dm, q, linkage);
      n_clusters_here = 1 + *std::max_element(group_labels.begin(), group_labels.end());
      json g;
      g["n_items"] = members.size();
      g["n_clusters"] = n_clusters_here;
      if (n_clusters_here >= 2) g["silhouette"] = silhouette(dm, group_labels);
      quality[group] = g;
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      labels[members[k]].cluster_label = label_offset + group_labels[k];
    }
    label_offset += n_clusters_here;
  }
  write_label_csv((dir / "labels.csv").string(), labels);
  write_text_file((dir / "label_quality.json").string(), quality.dump(2) + "\n");
}

inline void stage_encode(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto labels = read_label_csv(detail::require_artifact(cfg, "labels.csv", "label"));
  const auto seqs = encode(labels);
  write_sequences_jsonl((dir / "sequences.jsonl").string(), seqs);
}

namespace detail {

inline std::vector<SymbolSequence> read_corpus(const PipelineConfig& cfg) {
  return read_sequences_jsonl(require_artifact(cfg, "sequences.jsonl", "synth (or encode)"));
}

}  // namespace detail

inline void stage_seqfeat(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto seqs = detail::read_corpus(cfg);
  const auto model = build_context_model(seqs, cfg.get_double("seq.alpha"));
  std::vector<FeatureVector> feats;
  feats.reserve(seqs.size());
  for (const auto& s : seqs) feats.push_back(features(s, model));
  write_feature_csv((dir / "seq_features.csv").string(), seqs, feats);
}

inline void stage_mr(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto seqs = detail::read_corpus(cfg);
  const bool per_emitter = cfg.get_bool("maxrep.per_emitter");
  const std::int64_t min_support = cfg.get_i64("maxrep.min_support");
  const int min_length = cfg.get_int("maxrep.min_length");

  // pooled per context by default; per (context, emitter) behind the flag,
  // with per-emitter repeats merged into the context inventory
  std::map<Context, std::vector<std::vector<SymbolSequence>>> corpora;
  if (per_emitter) {
    std::map<std::pair<Context, std::string>, std::vector<SymbolSequence>> split;
    for (const auto& s : seqs) split[{s.context, s.emitter_id}].push_back(s);
    for (auto& [key, corpus] : split) corpora[key.first].push_back(std::move(corpus));
  } else {
    std::map<Context, std::vector<SymbolSequence>> split;
    for (const auto& s : seqs) split[s.context].push_back(s);
    for (auto& [ctx, corpus] : split) corpora[ctx].push_back(std::move(corpus));
  }

  std::vector<MrInventory> inventories;
  json summary = json::object();
  for (const auto& [ctx, groups] : corpora) {
    // one pattern per context; per-emitter supports are pooled
    std::map<std::vector<int>, std::int64_t> aggregated;
    for (const auto& corpus : groups) {
      for (const auto& r : maximal_repeats(corpus)) aggregated[r.pattern] += r.support;
    }
    std::vector<MaximalRepeat> merged;
    merged.reserve(aggregated.size());
    for (auto& [pattern, support] : aggregated) merged.push_back({pattern, support});
    MrInventory inv;
    inv.context = ctx;
    inv.min_support = 2;
    inv.repeats = std::move(merged);
    // summary statistics at the configured support level
    const auto filtered = filter_inventory(ctx, inv.repeats, min_support, min_length);
    json s;
    s["n_repeat_types"] = inv.repeats.size();
    s["n_qualifying"] = filtered.repeats.size();
    if (!filtered.repeats.empty()) {
      double mean_len = 0.0;
      for (const auto& r : filtered.repeats) mean_len += r.length();
      s["mean_length"] = mean_len / static_cast<double>(filtered.repeats.size());
      json hist = json::object();
      for (const auto& [len, count] : mr_length_distribution(filtered)) {
        hist[std::to_string(len)] = count;
      }
      s["length_histogram"] = hist;
    }
    summary[std::string(to_string(ctx))] = s;
    inventories.push_back(std::move(inv));
  }
  write_mr_csv((dir / "mr_inventory.csv").string(), inventories);
  write_text_file((dir / "mr_summary.json").string(), summary.dump(2) + "\n");
}

namespace detail {

inline json fit_to_json(const FitResult& fit) {
  json j;
  j["family"] = std::string(to_string(fit.family));
  if (std::isfinite(fit.alpha)) j["alpha"] = fit.alpha;
  if (std::isfinite(fit.lambda)) j["lambda"] = fit.lambda;
  j["xmin"] = fit.xmin;
  j["loglik"] = fit.loglik;
  j["n_tail"] = fit.n_tail;
  return j;
}

inline json lrt_to_json(const LrtResult& lrt) {
  json j;
  j["r"] = lrt.r;
  j["p_value"] = lrt.p_value;
  j["preferred"] = lrt.preferred ? std::string(to_string(*lrt.preferred)) : "none";
  return j;
}

}  // namespace detail

/// HP3: repeat-length distribution fits (exponential vs power law vs
/// truncated power law) per context and pooled.
inline void stage_fit(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto mr_path = detail::require_artifact(cfg, "mr_inventory.csv", "mr");
  const std::int64_t min_support = cfg.get_i64("maxrep.min_support");
  const int min_length = cfg.get_int("maxrep.min_length");

  std::map<std::string, std::vector<std::int64_t>> lengths;  // per context + "pooled"
  for (const auto& f : read_csv(mr_path, kMrCsvHeader)) {
    if (f.size() != 4) throw std::runtime_error("fit: malformed mr_inventory.csv row");
    const std::int64_t support = std::stoll(f[3]);
    const int length = std::stoi(f[2]);
    if (support < min_support || length < min_length) continue;
    lengths[f[0]].push_back(length);
    lengths["pooled"].push_back(length);
  }

  json out = json::object();
  for (const auto& [label, data] : lengths) {
    json entry;
    entry["n"] = data.size();
    std::int64_t xmin = cfg.get_i64("stats.xmin");
    if (cfg.get_bool("stats.xmin_scan")) xmin = scan_xmin(data);
    entry["xmin"] = xmin;
    try {
      const auto pl = fit_powerlaw(data, xmin);
      const auto ex = fit_exponential(data, xmin);
      const auto tpl = fit_truncated_powerlaw(data, xmin);
      entry["powerlaw"] = detail::fit_to_json(pl);
      entry["exponential"] = detail::fit_to_json(ex);
      entry["truncated_powerlaw"] = detail::fit_to_json(tpl);
      entry["lrt_powerlaw_vs_exponential"] = detail::lrt_to_json(likelihood_ratio_test(data, pl, ex));
      entry["lrt_truncated_vs_exponential"] = detail::lrt_to_json(likelihood_ratio_test(data, tpl, ex));
      entry["lrt_truncated_vs_powerlaw"] = detail::lrt_to_json(likelihood_ratio_test(data, tpl, pl));
    } catch (const std::exception& e) {
      entry["skipped"] = e.what();
    }
    out[label] = entry;
  }
  write_text_file((dir / "fits.json").string(), out.dump(2) + "\n");
}

/// HP1: original-vs-permuted classification.
inline void stage_hp1(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto seqs = detail::read_corpus(cfg);
  ForestParams params;
  params.n_trees = cfg.get_int("classify.n_trees");
  params.mtry = cfg.get_int("classify.mtry");
  params.min_samples_leaf = cfg.get_int("classify.min_samples_leaf");
  const auto outcome = permutation_experiment(
      seqs, params, derive_seed(cfg.get_u64("run.master_seed"), "hp1"), cfg.get_double("seq.alpha"),
      cfg.get_int("classify.k_folds"), cfg.get_bool("classify.corpus_level_shuffle"));
  json out;
  out["f1_original"] = outcome.f1_original;
  out["f1_permuted"] = outcome.f1_permuted;
  out["delta"] = outcome.delta;
  const auto confusion_to_json = [](const EvalReport& r) {
    json j = json::object();
    for (const auto& [t, row] : r.confusion) {
      json jr = json::object();
      for (const auto& [p, c] : row) jr[std::string(to_string(p))] = c;
      j[std::string(to_string(t))] = jr;
    }
    return j;
  };
  out["confusion_original"] = confusion_to_json(outcome.report_original);
  out["confusion_permuted"] = confusion_to_json(outcome.report_permuted);
  write_text_file((dir / "hp1.json").string(), out.dump(2) + "\n");
}

/// HP2: pairwise Wilcoxon rank-sum over per-context syllable frequency vectors.
inline void stage_hp2(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto seqs = detail::read_corpus(cfg);
  const auto table = syllable_frequency_table(seqs);
  std::vector<Context> contexts;
  for (const auto& [ctx, _] : table.frequencies) contexts.push_back(ctx);

  std::ofstream csv(dir / "wilcoxon_matrix.csv");
  csv << "context_a,context_b,statistic,p_value\n";
  json out = json::object();
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    for (std::size_t j = i + 1; j < contexts.size(); ++j) {
      const auto res = wilcoxon_rank_sum(table.frequencies.at(contexts[i]), table.frequencies.at(contexts[j]));
      csv << to_string(contexts[i]) << ',' << to_string(contexts[j]) << ',' << fmt_double(res.statistic) << ','
          << fmt_double(res.p_value) << "\n";
      json cell;
      cell["statistic"] = res.statistic;
      cell["p_value"] = res.p_value;
      cell["significant"] = res.p_value < 0.05;
      out[std::string(to_string(contexts[i])) + "_vs_" + std::string(to_string(contexts[j]))] = cell;
    }
  }
  write_text_file((dir / "hp2.json").string(), out.dump(2) + "\n");
}

/// Plain cross-validated classification plus feature importances.
inline void stage_classify(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto seqs = detail::read_corpus(cfg);
  const auto model = build_context_model(seqs, cfg.get_double("seq.alpha"));
  const auto x = featurize_corpus(seqs, model);
  std::vector<Context> y;
  for (const auto& s : seqs) y.push_back(s.context);
  ForestParams params;
  params.n_trees = cfg.get_int("classify.n_trees");
  params.mtry = cfg.get_int("classify.mtry");
  params.min_samples_leaf = cfg.get_int("classify.min_samples_leaf");
  const std::uint64_t seed = derive_seed(cfg.get_u64("run.master_seed"), "classify");
  const auto report = cross_validate(x, y, cfg.get_int("classify.k_folds"), seed, params);

  std::vector<int> yi;
  for (const auto& s : seqs) yi.push_back(static_cast<int>(s.context));
  const auto full_model = train_forest(x, yi, params, derive_seed(seed, "final-model"));
  const auto importance = feature_importance(full_model);

  json out;
  out["macro_f1"] = report.macro_f1;
  json per_class = json::object();
  for (const auto& [ctx, f1] : report.per_class_f1) per_class[std::string(to_string(ctx))] = f1;
  out["per_class_f1"] = per_class;
  json imp = json::object();
  for (int f = 0; f < FeatureVector::kCount; ++f) imp[FeatureVector::names()[f]] = importance[f];
  out["feature_importance"] = imp;
  out["importance_degenerate"] = full_model.degenerate_importance;
  write_text_file((dir / "eval.json").string(), out.dump(2) + "\n");

  std::ofstream csv(dir / "confusion.csv");
  csv << "true_context,predicted_context,count\n";
  for (const auto& [t, row] : report.confusion) {
    for (const auto& [p, c] : row) {
      csv << to_string(t) << ',' << to_string(p) << ',' << c << "\n";
    }
  }
}

/// Per-context transition networks and their structural metrics.
inline void stage_network(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  const auto seqs = detail::read_corpus(cfg);
  std::map<Context, std::vector<SymbolSequence>> by_context;
  for (const auto& s : seqs) by_context[s.context].push_back(s);
  std::map<Context, TransitionGraph> graphs;
  for (const auto& [ctx, corpus] : by_context) graphs[ctx] = build_transition_graph(corpus);

  for (const auto& [ctx, g] : graphs) {
    std::ofstream edges(dir / ("edges_" + std::string(to_string(ctx)) + ".csv"));
    edges << "src,dst,weight\n";
    for (const auto& [e, w] : g.edges) edges << e.first << ',' << e.second << ',' << w << "\n";
  }

  const auto sweep = small_world_sweep(graphs, derive_seed(cfg.get_u64("run.master_seed"), "network"),
                                       cfg.get_int("netgraph.n_rand"));
  std::ofstream csv(dir / "graph_metrics.csv");
  csv << "context,support,sigma,omega,big_clique,all_cliques,density,avg_clustering\n";
  for (const auto& [ctx, m] : sweep) {
    csv << to_string(ctx) << ',' << m.support << ',' << (m.sigma ? fmt_double(*m.sigma) : "") << ','
        << (m.omega ? fmt_double(*m.omega) : "") << ',' << m.n_big_clique << ',' << m.n_all_cliques << ','
        << fmt_double(m.density) << ',' << fmt_double(m.avg_clustering) << "\n";
  }
}

/// Bundles every present artifact into one report JSON (plus the CSVs already
/// on disk). Reruns with the same config and seed are byte-identical.
inline void stage_report(const PipelineConfig& cfg) {
  const fs::path dir = detail::workdir(cfg);
  json report;
  report["master_seed"] = cfg.get_u64("run.master_seed");
  json config = json::object();
  for (const auto& [k, v] : cfg.values()) config[k] = v;
  report["config"] = config;

  const auto attach_json = [&](const char* key, const char* file) {
    const fs::path p = dir / file;
    if (fs::exists(p)) report[key] = json::parse(read_text_file(p.string()));
  };
  attach_json("ingest", "ingest_report.json");
  attach_json("label_quality", "label_quality.json");
  attach_json("mr_summary", "mr_summary.json");
  attach_json("fits", "fits.json");
  attach_json("hp1", "hp1.json");
  attach_json("hp2", "hp2.json");
  attach_json("classification", "eval.json");

  const fs::path metrics = dir / "graph_metrics.csv";
  if (fs::exists(metrics)) {
    json rows = json::array();
    for (const auto& f :
         read_csv(metrics.string(), "context,support,sigma,omega,big_clique,all_cliques,density,avg_clustering")) {
      json row;
      row["context"] = f[0];
      row["support"] = std::stoll(f[1]);
      if (!f[2].empty()) row["sigma"] = std::stod(f[2]);
      if (!f[3].empty()) row["omega"] = std::stod(f[3]);
      row["big_clique"] = std::stoll(f[4]);
      row["all_cliques"] = std::stoll(f[5]);
      row["density"] = std::stod(f[6]);
      row["avg_clustering"] = std::stod(f[7]);
      rows.push_back(row);
    }
    report["graph_metrics"] = rows;
  }

  // plot-ready CSV companions of the JSON sections
  if (report.contains("mr_summary")) {
    std::ofstream csv(dir / "mr_stats.csv");
    csv << "context,n_repeat_types,n_qualifying,mean_length\n";
    for (const auto& [ctx, s] : report["mr_summary"].items()) {
      csv << ctx << ',' << s["n_repeat_types"].get<std::int64_t>() << ','
          << s["n_qualifying"].get<std::int64_t>() << ','
          << (s.contains("mean_length") ? fmt_double(s["mean_length"].get<double>()) : "") << "\n";
    }
  }
  if (report.contains("fits")) {
    std::ofstream csv(dir / "fit_comparison.csv");
    csv << "group,family,alpha,lambda,loglik,n_tail,lrt_vs_exponential_p,preferred\n";
    for (const auto& [group, entry] : report["fits"].items()) {
      if (entry.contains("skipped")) continue;
      for (const char* family : {"powerlaw", "exponential", "truncated_powerlaw"}) {
        const auto& f = entry[family];
        const char* lrt_key =
            std::string(family) == "truncated_powerlaw" ? "lrt_truncated_vs_exponential" : "lrt_powerlaw_vs_exponential";
        csv << group << ',' << family << ','
            << (f.contains("alpha") ? fmt_double(f["alpha"].get<double>()) : "") << ','
            << (f.contains("lambda") ? fmt_double(f["lambda"].get<double>()) : "") << ','
            << fmt_double(f["loglik"].get<double>()) << ',' << f["n_tail"].get<std::int64_t>() << ','
            << (std::string(family) == "exponential" ? ""
                                                     : fmt_double(entry[lrt_key]["p_value"].get<double>()))
            << ','
            << (std::string(family) == "exponential" ? "" : entry[lrt_key]["preferred"].get<std::string>())
            << "\n";
      }
    }
  }
  if (report.contains("hp1")) {
    std::ofstream csv(dir / "f1_pair.csv");
    csv << "condition,macro_f1\n";
    csv << "original," << fmt_double(report["hp1"]["f1_original"].get<double>()) << "\n";
    csv << "permuted," << fmt_double(report["hp1"]["f1_permuted"].get<double>()) << "\n";
  }
  write_text_file((dir / "report.json").string(), report.dump(2) + "\n");
}

/// Dispatch by stage name (the CLI subcommands map here 1:1).
inline void run_stage(const std::string& stage, const PipelineConfig& cfg) {
  if (stage == "synth") return stage_synth(cfg);
  if (stage == "ingest") return stage_ingest(cfg);
  if (stage == "segment") return stage_segment(cfg);
  if (stage == "featurize") return stage_featurize(cfg);
  if (stage == "label") return stage_label(cfg);
  if (stage == "encode") return stage_encode(cfg);
  if (stage == "seqfeat") return stage_seqfeat(cfg);
  if (stage == "mr") return stage_mr(cfg);
  if (stage == "fit") return stage_fit(cfg);
  if (stage == "test-hp1") return stage_hp1(cfg);
  if (stage == "test-hp2") return stage_hp2(cfg);
  if (stage == "classify") return stage_classify(cfg);
  if (stage == "network") return stage_network(cfg);
  if (stage == "report") return stage_report(cfg);
  throw std::runtime_error("unknown stage: " + stage);
}

}  // namespace vocseq
