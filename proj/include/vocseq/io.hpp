#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vocseq/audio.hpp"
#include "vocseq/label.hpp"
#include "vocseq/maxrep.hpp"
#include "vocseq/segment.hpp"
#include "vocseq/seq.hpp"

namespace vocseq {

using json = nlohmann::ordered_json;  // stable key order keeps reports byte-reproducible

/// Deterministic shortest-ish decimal formatting for CSV output.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// WAV (PCM 16-bit or IEEE float 32-bit; stereo is downmixed by averaging)
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
inline std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
inline void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}
inline void write_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace detail

inline AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open " + path);
  char tag[5] = {};
  in.read(tag, 4);
  if (std::strncmp(tag, "RIFF", 4) != 0) throw std::runtime_error("read_wav: not a RIFF file: " + path);
  detail::read_u32(in);  // riff size
  in.read(tag, 4);
  if (std::strncmp(tag, "WAVE", 4) != 0) throw std::runtime_error("read_wav: not a WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  std::vector<char> data;
  while (in.read(tag, 4)) {
    const std::uint32_t size = detail::read_u32(in);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      format = detail::read_u16(in);
      channels = detail::read_u16(in);
      sample_rate = detail::read_u32(in);
      detail::read_u32(in);  // byte rate
      detail::read_u16(in);  // block align
      bits = detail::read_u16(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
    } else if (std::strncmp(tag, "data", 4) == 0) {
      data.resize(size);
      in.read(data.data(), size);
    } else {
      in.seekg(size + (size % 2), std::ios::cur);  // chunks are word-aligned
    }
  }
  if (sample_rate == 0 || channels == 0) throw std::runtime_error("read_wav: missing fmt chunk: " + path);
  if (data.empty()) throw std::runtime_error("read_wav: missing data chunk: " + path);

  AudioClip clip;
  clip.sample_rate = sample_rate;
  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * bits / 8;
  const std::size_t n_frames = data.size() / frame_bytes;
  clip.samples.resize(n_frames);
  if (format == 1 && bits == 16) {
    for (std::size_t f = 0; f < n_frames; ++f) {
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        std::int16_t v;
        std::memcpy(&v, data.data() + f * frame_bytes + c * 2, 2);
        acc += static_cast<double>(v) / 32768.0;
      }
      clip.samples[f] = acc / channels;
    }
  } else if (format == 3 && bits == 32) {
    for (std::size_t f = 0; f < n_frames; ++f) {
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        float v;
        std::memcpy(&v, data.data() + f * frame_bytes + c * 4, 4);
        acc += v;
      }
      clip.samples[f] = acc / channels;
    }
  } else {
    throw std::runtime_error("read_wav: unsupported format (need PCM16 or float32): " + path);
  }
  return clip;
}

inline void write_wav(const std::string& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_wav: cannot open " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_size = n * 4;
  out.write("RIFF", 4);
  detail::write_u32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  detail::write_u32(out, 16);
  detail::write_u16(out, 3);  // IEEE float
  detail::write_u16(out, 1);  // mono
  detail::write_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  detail::write_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 4);
  detail::write_u16(out, 4);
  detail::write_u16(out, 32);
  out.write("data", 4);
  detail::write_u32(out, data_size);
  for (double s : clip.samples) {
    const float v = static_cast<float>(s);
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
}

// ---------------------------------------------------------------------------
// CSV helpers (simple comma-separated, no quoting; fields must not contain
// commas or newlines)
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

/// Reads a CSV with a required header; returns rows of fields.
inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw std::runtime_error("read_csv: " + path + ": expected header '" + expected_header + "', got '" + line +
                             "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

inline const char* kSegmentCsvHeader = "recording_id,seg_index,onset_s,offset_s";

inline void write_segment_csv(const std::string& path, const std::vector<Segment>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_segment_csv: cannot open " + path);
  out << kSegmentCsvHeader << "\n";
  for (const auto& r : rows) {
    out << r.recording_id << ',' << r.seg_index << ',' << fmt_double(r.onset_s) << ',' << fmt_double(r.offset_s)
        << "\n";
  }
}

inline std::vector<Segment> read_segment_csv(const std::string& path) {
  std::vector<Segment> rows;
  for (const auto& f : read_csv(path, kSegmentCsvHeader)) {
    if (f.size() != 4) throw std::runtime_error("read_segment_csv: malformed row in " + path);
    rows.push_back({f[0], std::stoi(f[1]), std::stod(f[2]), std::stod(f[3])});
  }
  return rows;
}

inline const char* kLabelCsvHeader = "syllable_id,recording_id,onset_s,offset_s,emitter_id,context,cluster_label";

inline void write_label_csv(const std::string& path, const std::vector<LabelRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_label_csv: cannot open " + path);
  out << kLabelCsvHeader << "\n";
  for (const auto& r : rows) {
    out << r.syllable_id << ',' << r.recording_id << ',' << fmt_double(r.onset_s) << ','
        << fmt_double(r.offset_s) << ',' << r.emitter_id << ',' << to_string(r.context) << ',' << r.cluster_label
        << "\n";
  }
}

inline std::vector<LabelRow> read_label_csv(const std::string& path) {
  std::vector<LabelRow> rows;
  for (const auto& f : read_csv(path, kLabelCsvHeader)) {
    if (f.size() != 7) throw std::runtime_error("read_label_csv: malformed row in " + path);
    const auto ctx = parse_context(f[5]);
    if (!ctx) throw std::runtime_error("read_label_csv: unknown context '" + f[5] + "' in " + path);
    rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), f[4], *ctx, std::stoi(f[6])});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Sequences as JSON Lines
// ---------------------------------------------------------------------------

inline void write_sequences_jsonl(const std::string& path, const std::vector<SymbolSequence>& seqs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sequences_jsonl: cannot open " + path);
  for (const auto& s : seqs) {
    json j;
    j["seq_id"] = s.seq_id;
    j["emitter_id"] = s.emitter_id;
    j["context"] = std::string(to_string(s.context));
    j["symbols"] = s.symbols;
    out << j.dump() << "\n";
  }
}

inline std::vector<SymbolSequence> read_sequences_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_sequences_jsonl: cannot open " + path);
  std::vector<SymbolSequence> seqs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (line.empty()) continue;
    json j = json::parse(line);
    SymbolSequence s;
    s.seq_id = j.at("seq_id").get<std::string>();
    s.emitter_id = j.at("emitter_id").get<std::string>();
    const auto ctx = parse_context(j.at("context").get<std::string>());
    if (!ctx) {
      throw std::runtime_error("read_sequences_jsonl: unknown context at " + path + ":" + std::to_string(line_no));
    }
    s.context = *ctx;
    s.symbols = j.at("symbols").get<std::vector<int>>();
    seqs.push_back(std::move(s));
  }
  return seqs;
}

// ---------------------------------------------------------------------------
// Distance matrix: dense row-major float64 binary + sidecar id list
// ---------------------------------------------------------------------------

inline void write_distance_matrix(const std::string& bin_path, const std::string& ids_path,
                                  const DistanceMatrix& d) {
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw std::runtime_error("write_distance_matrix: cannot open " + bin_path);
  const std::uint64_t n = static_cast<std::uint64_t>(d.values.rows());
  out.write(reinterpret_cast<const char*>(&n), 8);
  for (Eigen::Index i = 0; i < d.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.values.cols(); ++j) {
      const double v = d.values(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
  std::ofstream ids(ids_path);
  if (!ids) throw std::runtime_error("write_distance_matrix: cannot open " + ids_path);
  for (const auto& id : d.item_ids) ids << id << "\n";
}

inline DistanceMatrix read_distance_matrix(const std::string& bin_path, const std::string& ids_path) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw std::runtime_error("read_distance_matrix: cannot open " + bin_path);
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  DistanceMatrix d;
  d.values.resize(n, n);
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < n; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      d.values(i, j) = v;
    }
  }
  if (!in) throw std::runtime_error("read_distance_matrix: truncated " + bin_path);
  std::ifstream ids(ids_path);
  if (!ids) throw std::runtime_error("read_distance_matrix: cannot open " + ids_path);
  std::string line;
  while (std::getline(ids, line)) {
    if (!line.empty()) d.item_ids.push_back(line);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Feature matrix and maximal-repeat inventory CSVs
// ---------------------------------------------------------------------------

inline void write_feature_csv(const std::string& path, const std::vector<SymbolSequence>& seqs,
                              const std::vector<FeatureVector>& features) {
  if (seqs.size() != features.size()) throw std::invalid_argument("write_feature_csv: size mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_feature_csv: cannot open " + path);
  out << "seq_id,emitter_id,context";
  for (const auto& name : FeatureVector::names()) out << ',' << name;
  out << "\n";
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    out << seqs[i].seq_id << ',' << seqs[i].emitter_id << ',' << to_string(seqs[i].context);
    for (double v : features[i].as_array()) out << ',' << fmt_double(v);
    out << "\n";
  }
}

inline const char* kMrCsvHeader = "context,pattern,length,support";

/// Pattern encoded as hyphen-joined ints.
inline void write_mr_csv(const std::string& path, const std::vector<MrInventory>& inventories) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mr_csv: cannot open " + path);
  out << kMrCsvHeader << "\n";
  for (const auto& inv : inventories) {
    for (const auto& r : inv.repeats) {
      out << to_string(inv.context) << ',';
      for (std::size_t i = 0; i < r.pattern.size(); ++i) {
        if (i) out << '-';
        out << r.pattern[i];
      }
      out << ',' << r.length() << ',' << r.support << "\n";
    }
  }
}

// ---------------------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_text_file: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace vocseq
