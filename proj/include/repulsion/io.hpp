#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "repulsion/certify.hpp"
#include "repulsion/descent.hpp"
#include "repulsion/measures.hpp"

namespace repulsion::io {

/// Writes content to a sibling temporary file and renames it over path, so a
/// failed run never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string format_double(double v);

// Measure CSV:
//   # manifold: sphere:2
//   w,x1,x2,x3
//   0.5,0,0,1
// The manifold line is optional when the caller supplies the manifold.
std::string measure_csv(const DiscreteMeasure& mu);
DiscreteMeasure parse_measure_csv(const std::string& text,
                                  const std::optional<Manifold>& fallback = std::nullopt);
DiscreteMeasure read_measure(const std::filesystem::path& path,
                             const std::optional<Manifold>& fallback = std::nullopt);
void write_measure(const std::filesystem::path& path, const DiscreteMeasure& mu);

std::string trajectory_csv(const Trajectory& traj);

struct PhaseRow {
  double delta = 0.0;
  double final_energy = 0.0;
  std::size_t support_card = 0;
  double max_cluster_diameter = 0.0;
  std::string status = "ok";
};
std::string phase_table_csv(const std::vector<PhaseRow>& rows);

std::string certificate_json(const CertificateReport& rep);

}  // namespace repulsion::io
