#include "srjet/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace srjet {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (int r = 0; r < rows.rows(); ++r) {
    for (int c = 0; c < rows.cols(); ++c)
      out << (c ? "," : "") << format_full(rows(r, c));
    out << "\n";
  }
}

std::string digest_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

static std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string RunManifest::to_json() const {
  std::string j = "{\n  \"tool_version\": \"" + json_escape(tool_version) +
                  "\",\n  \"config_digest\": \"" + json_escape(config_digest) +
                  "\",\n  \"outputs\": {";
  for (std::size_t i = 0; i < outputs.size(); ++i)
    j += std::string(i ? "," : "") + "\n    \"" +
         json_escape(outputs[i].first) + "\": \"" +
         json_escape(outputs[i].second) + "\"";
  j += outputs.empty() ? "},\n" : "\n  },\n";
  j += "  \"timings\": {";
  for (std::size_t i = 0; i < timings.size(); ++i)
    j += std::string(i ? "," : "") + "\n    \"" +
         json_escape(timings[i].first) + "\": " + format_full(timings[i].second);
  j += timings.empty() ? "}\n}\n" : "\n  }\n}\n";
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
}

}  // namespace srjet
