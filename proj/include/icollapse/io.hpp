#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "icollapse/config.hpp"

namespace icollapse {

inline constexpr int kArtifactVersion = 1;

/// Identifies the run that produced an artifact.
struct ArtifactMeta {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
  int artifact_version = kArtifactVersion;
  bool partial = false;

  Json json() const {
    return {{"scenario", scenario},
            {"config_hash", config_hash},
            {"seed", seed},
            {"artifact_version", artifact_version},
            {"partial", partial}};
  }
};

inline ArtifactMeta artifact_meta(const RunConfig& c, bool partial = false) {
  return {scenario_name(c.scenario), config_hash(c), c.ensemble.master_seed, kArtifactVersion, partial};
}

/// Writes to `path.tmp` and renames over `path`, creating parent
/// directories as needed.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Column table rendered as CSV with the artifact metadata in leading
/// `#` comment lines.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(const std::vector<double>& values) {
    if (values.size() != columns_.size()) throw std::invalid_argument("CSV row width differs from header");
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    rows_.push_back(std::move(cells));
  }
  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw std::invalid_argument("CSV row width differs from header");
    rows_.push_back(std::move(cells));
  }

  std::size_t rows() const { return rows_.size(); }

  std::string render(const ArtifactMeta& meta) const {
    std::ostringstream os;
    os << "# scenario=" << meta.scenario << "\n# config_hash=" << meta.config_hash << "\n# seed=" << meta.seed
       << "\n# artifact_version=" << meta.artifact_version << "\n";
    if (meta.partial) os << "# partial=true\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// JSON report with a `meta` block; non-finite numbers become null.
inline std::string render_report(const ArtifactMeta& meta, Json body) {
  body["meta"] = meta.json();
  return body.dump(2) + "\n";
}

inline Json trajectory_json(const TrajectoryRecord& r) {
  return {{"seed", r.seed},
          {"stream", r.stream},
          {"steps_taken", r.steps_taken},
          {"collapse_flag", to_string(r.flag)},
          {"aborted", r.aborted},
          {"abort_reason", r.abort_reason},
          {"final_weight", r.final_weight()}};
}

/// One row per recorded step: step, time, interacting weight, norm drift and,
/// when recorded, the total expectations.
inline CsvTable trajectory_csv(const TrajectoryRecord& r) {
  std::vector<std::string> cols{"step", "time", "weight_interacting", "norm_drift"};
  const bool ex = !r.expectations.empty();
  std::size_t dims = 0;
  if (ex) {
    dims = r.expectations.front().total.momentum.size();
    for (std::size_t d = 0; d < dims; ++d) cols.push_back("momentum_" + std::to_string(d));
    cols.push_back("angular_momentum_z");
    cols.push_back("energy");
  }
  CsvTable t(cols);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::vector<double> row{static_cast<double>(r.steps[i]), r.times[i], r.weight_interacting[i], r.norm_drift[i]};
    if (ex) {
      const Expectations& e = r.expectations[i].total;
      for (std::size_t d = 0; d < dims; ++d) row.push_back(d < e.momentum.size() ? e.momentum[d] : 0.0);
      row.push_back(e.angular_momentum_z);
      row.push_back(e.energy);
    }
    t.add_row(row);
  }
  return t;
}

}  // namespace icollapse
