#include "dmac/run_io.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "dmac/errors.hpp"

namespace dmac {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw Error(fmt::format("csv: cannot parse number '{}'", text));
  }
  return v;
}

void append_vector(std::string& row, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    row += ',';
    row += format_double(v(i));
  }
}

void append_names(std::string& row, const char* prefix, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) row += fmt::format(",{}_{}", prefix, i);
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

std::string format_axis_value(double value) { return fmt::format("{}", value); }

std::string run_file_stem(const std::string& experiment, const std::string& axis,
                          const std::string& value, std::uint64_t seed) {
  return fmt::format("{}_{}_{}_{}", experiment, axis, value, seed);
}

std::string csv_header(const RunLog& log) {
  Eigen::Index ny = 0, nu = 0, nx = 0, nt = 0;
  if (!log.records.empty()) {
    const auto& r = log.records.front();
    ny = r.y.size();
    nu = r.u.size();
    nx = r.xi.size();
    nt = r.theta.size();
  }
  std::string h = "k,t";
  append_names(h, "y", ny);
  append_names(h, "r", ny);
  append_names(h, "z", ny);
  append_names(h, "u", nu);
  append_names(h, "xi", nx);
  append_names(h, "theta", nt);
  h += ",spectral_radius,status";
  return h;
}

void write_run_csv(std::ostream& out, const RunLog& log) {
  out << csv_header(log) << '\n';
  std::string row;
  for (const auto& r : log.records) {
    row = fmt::format("{},{}", r.k, format_double(r.t));
    append_vector(row, r.y);
    append_vector(row, r.r);
    append_vector(row, r.z);
    append_vector(row, r.u);
    append_vector(row, r.xi);
    append_vector(row, r.theta);
    row += ',';
    row += format_double(r.spectral_radius);
    row += ',';
    row += to_string(r.status);
    out << row << '\n';
  }
}

RunLog read_run_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("csv: missing header");
  const auto header = split(line, ',');
  if (header.size() < 4 || header[0] != "k" || header[1] != "t" ||
      header[header.size() - 2] != "spectral_radius" || header.back() != "status") {
    throw Error("csv: unrecognized header");
  }

  // Column block sizes from the header prefixes.
  auto count = [&](const std::string& prefix) {
    Eigen::Index n = 0;
    for (const auto& h : header) {
      if (h.rfind(prefix + "_", 0) == 0) ++n;
    }
    return n;
  };
  const Eigen::Index ny = count("y"), nu = count("u"), nx = count("xi"), nt = count("theta");
  const std::size_t expected = 2 + 3 * ny + nu + nx + nt + 2;
  if (header.size() != expected) throw Error("csv: header has unexpected columns");

  RunLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != expected) throw Error(fmt::format("csv: row has {} cells", cells.size()));
    std::size_t c = 0;
    auto take = [&](Eigen::Index n) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = parse_double(cells[c++]);
      return v;
    };
    RunRecord r;
    r.k = static_cast<std::size_t>(std::stoull(cells[c++]));
    r.t = parse_double(cells[c++]);
    r.y = take(ny);
    r.r = take(ny);
    r.z = take(ny);
    r.u = take(nu);
    r.xi = take(nx);
    r.theta = take(nt);
    r.spectral_radius = parse_double(cells[c++]);
    const auto status = parse_synthesis_status(cells[c++]);
    if (!status) throw Error("csv: unknown synthesis status");
    r.status = *status;
    log.records.push_back(std::move(r));
  }
  return log;
}

std::string summary_json(const ExperimentSpec& spec, const RunLog& log, const RunSummary& s) {
  nlohmann::ordered_json j;
  j["experiment"] = spec.name;
  j["plant"] = plant_kind(spec.plant);
  j["seed"] = spec.seed;
  j["sample_time"] = spec.sample_time;
  j["duration"] = spec.duration;
  j["records"] = s.records;
  j["final_mean_abs_error"] = finite_or_null(s.final_mean_abs_error);
  j["max_abs_input"] = finite_or_null(s.max_abs_input);
  j["settle_step"] = s.settle_step ? nlohmann::json(*s.settle_step) : nlohmann::json(nullptr);
  j["threshold"] = s.threshold;
  j["converged"] = s.converged;
  j["diverged"] = s.diverged;
  j["divergence_step"] =
      log.divergence_step ? nlohmann::json(*log.divergence_step) : nlohmann::json(nullptr);
  j["max_covariance_asymmetry"] = log.max_covariance_asymmetry;
  j["final_covariance_condition"] = finite_or_null(log.final_covariance_condition);
  return j.dump(2);
}

void write_sweep_summary_csv(std::ostream& out, const std::string& axis,
                             const std::vector<SweepCell>& cells) {
  out << "axis,value,seed,final_mean_abs_error,max_abs_input,settle_step,converged,diverged,file\n";
  for (const auto& c : cells) {
    const std::string value = format_axis_value(c.value);
    out << axis << ',' << value << ',' << c.spec.seed << ','
        << format_double(c.summary.final_mean_abs_error) << ','
        << format_double(c.summary.max_abs_input) << ','
        << (c.summary.settle_step ? std::to_string(*c.summary.settle_step) : std::string("-1"))
        << ',' << (c.summary.converged ? 1 : 0) << ',' << (c.summary.diverged ? 1 : 0) << ','
        << run_file_stem(c.spec.name, axis, value, c.spec.seed) << ".csv\n";
  }
}

}  // namespace dmac
