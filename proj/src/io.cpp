#include "repulsion/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "json.hpp"

#include "repulsion/errors.hpp"

namespace repulsion::io {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw InvalidInput("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
  return v;
}

nlohmann::json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("cannot write " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string measure_csv(const DiscreteMeasure& mu) {
  const auto& M = mu.manifold();
  std::string out = "# manifold: " + M.to_string() + "\nw";
  for (int k = 1; k <= M.ambient_dim(); ++k) out += ",x" + std::to_string(k);
  out += '\n';
  for (const auto& a : mu.atoms()) {
    out += format_double(a.weight);
    for (Eigen::Index k = 0; k < a.point.size(); ++k) out += "," + format_double(a.point[k]);
    out += '\n';
  }
  return out;
}

DiscreteMeasure parse_measure_csv(const std::string& text, const std::optional<Manifold>& fallback) {
  std::optional<Manifold> M;
  std::vector<std::vector<double>> rows;
  bool header_seen = false;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "manifold:";
      const auto pos = line.find(key);
      if (pos != std::string::npos) M = Manifold::parse(trim(line.substr(pos + key.size())));
      continue;
    }
    auto cells = split(line, ',');
    if (!header_seen && !cells.empty() && cells[0] == "w") {
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_number(c, line_no));
    rows.push_back(std::move(row));
  }
  if (!M) M = fallback;
  if (!M) throw InvalidInput("measure file does not name its manifold");
  if (fallback && !(*fallback == *M)) {
    throw InvalidInput("measure lives on " + M->to_string() + ", expected " + fallback->to_string());
  }
  if (rows.empty()) throw InvalidInput("measure file has no atoms");
  const auto width = static_cast<std::size_t>(M->ambient_dim()) + 1;
  std::vector<Atom> atoms;
  for (const auto& r : rows) {
    if (r.size() != width) {
      throw InvalidInput("expected " + std::to_string(width) + " columns, got " + std::to_string(r.size()));
    }
    Point x(static_cast<Eigen::Index>(width - 1));
    for (std::size_t k = 1; k < width; ++k) x[static_cast<Eigen::Index>(k - 1)] = r[k];
    atoms.push_back({std::move(x), r[0]});
  }
  return DiscreteMeasure(*M, std::move(atoms));
}

DiscreteMeasure read_measure(const std::filesystem::path& path, const std::optional<Manifold>& fallback) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_measure_csv(ss.str(), fallback);
}

void write_measure(const std::filesystem::path& path, const DiscreteMeasure& mu) {
  write_file_atomic(path, measure_csv(mu));
}

std::string trajectory_csv(const Trajectory& traj) {
  static const char* kinds[] = {"start", "descent", "anneal", "merge"};
  std::string out = "iter,energy,grad_norm,support_card,step\n";
  for (const auto& it : traj.iterates) {
    out += std::to_string(it.iter) + "," + format_double(it.energy) + "," + format_double(it.grad_norm) +
           "," + std::to_string(it.support_card) + "," + kinds[static_cast<int>(it.kind)] + "\n";
  }
  return out;
}

std::string phase_table_csv(const std::vector<PhaseRow>& rows) {
  std::string out = "delta,final_energy,support_card,max_cluster_diameter,status\n";
  for (const auto& r : rows) {
    out += format_double(r.delta) + "," + format_double(r.final_energy) + "," +
           std::to_string(r.support_card) + "," + format_double(r.max_cluster_diameter) + "," + r.status + "\n";
  }
  return out;
}

std::string certificate_json(const CertificateReport& rep) {
  nlohmann::ordered_json j;
  j["condition"] = rep.condition;
  j["passed"] = rep.passed;
  j["worst_margin"] = number_or_string(rep.worst_margin);
  j["tolerance"] = rep.tolerance;
  j["samples_checked"] = rep.samples_checked;
  j["witness"] = {{"atoms", rep.witness_atoms}, {"description", rep.witness}};
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rep.config) cfg[k] = number_or_string(v);
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

}  // namespace repulsion::io
