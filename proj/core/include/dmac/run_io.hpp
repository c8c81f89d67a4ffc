#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dmac/harness.hpp"

namespace dmac {

// CSV layout, one row per step:
//   k,t,y_0..,r_0..,z_0..,u_0..,xi_0..,theta_0..,spectral_radius,status
// theta_j is column-major vec(Theta_k). Floats use 17 significant digits.

std::string csv_header(const RunLog& log);
void write_run_csv(std::ostream& out, const RunLog& log);
/// Parses a CSV produced by write_run_csv back into records.
RunLog read_run_csv(std::istream& in);

/// JSON object with the run summary and run metadata.
std::string summary_json(const ExperimentSpec& spec, const RunLog& log, const RunSummary& summary);

/// One row per sweep cell: axis, value, seed, final error, flags, file name.
void write_sweep_summary_csv(std::ostream& out, const std::string& axis,
                             const std::vector<SweepCell>& cells);

/// <experiment>_<axis>_<value>_<seed>.csv
std::string run_file_stem(const std::string& experiment, const std::string& axis,
                          const std::string& value, std::uint64_t seed);
std::string format_axis_value(double value);

/// Shortest decimal that round-trips, and the fixed 17-digit form.
std::string format_double(double value);

}  // namespace dmac
