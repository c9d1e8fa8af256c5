#pragma once

// RunTrace file: one `time_us kind node_id packet_id [detail]` line per
// record in execution order. Requires zlib for the gzip variant.

#include <zlib.h>

#include <fstream>
#include <stdexcept>
#include <string>

#include "csn/engine.hpp"

namespace csn {

inline std::string format_trace(const RunTrace& trace) {
  std::string out = "# time_us kind node_id packet_id detail\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.time);
    out += ' ';
    out += to_string(r.kind);
    out += ' ';
    out += std::to_string(r.node);
    out += ' ';
    out += r.packet ? r.packet->str() : "-";
    if (!r.detail.empty()) {
      out += ' ';
      out += r.detail;
    }
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// gzip output via zlib; the header carries no timestamp so output is reproducible.
inline void write_gzip_file(const std::string& path, const std::string& content) {
  gzFile f = gzopen(path.c_str(), "wb9");
  if (!f) throw std::runtime_error("cannot write " + path);
  const int written = content.empty() ? 0 : gzwrite(f, content.data(), static_cast<unsigned>(content.size()));
  const int rc = gzclose(f);
  if (written != static_cast<int>(content.size()) || rc != Z_OK) throw std::runtime_error("gzip write failed: " + path);
}

inline std::string read_gzip_file(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string out;
  char buf[1 << 14];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  gzclose(f);
  return out;
}

inline void write_trace_file(const std::string& path, const RunTrace& trace, bool gzip) {
  const auto text = format_trace(trace);
  if (gzip) write_gzip_file(path, text);
  else write_text_file(path, text);
}

}  // namespace csn
