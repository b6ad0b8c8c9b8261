#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace srjet {

// Full round-trip decimal form (shortest is not enough; reports must be
// byte-stable across platforms).
std::string format_full(double v);

// Plain CSV: header row, then one row per column index of `columns` entries.
// Every matrix must have the same number of columns (one per record).
void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows);

// FNV-1a 64-bit over the bytes of a string, rendered as 16 hex digits.
// Stable, order-sensitive; used to tie outputs to the exact input config.
std::string digest_hex(const std::string& bytes);

struct RunManifest {
  std::string tool_version = "0.1.0";
  std::string config_digest;
  std::vector<std::pair<std::string, std::string>> outputs;  // name, path
  std::vector<std::pair<std::string, double>> timings;       // name, seconds

  std::string to_json() const;
};

void write_text(const std::string& path, const std::string& text);

}  // namespace srjet
