#pragma once

// File formats. Field CSVs print 17 significant digits; JSON and report
// CSVs use the shortest representation that round-trips.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpot/eigenbasis.hpp"
#include "qpot/grid.hpp"
#include "qpot/madelung.hpp"
#include "qpot/semiclassical.hpp"

namespace qpot {

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An output file or directory could not be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_g17(double v);
std::string format_shortest(double v);

void write_csv(std::ostream& os, const RealField& f);     ///< x,value
void write_csv(std::ostream& os, const ComplexField& f);  ///< x,re,im
void write_csv(std::ostream& os, const MadelungFields& f); ///< x,rho,phi,q,mask
void write_csv(std::ostream& os, const ModeCoefficients& c); ///< k,re,im,abs2
/// Long format, one row per trajectory per snapshot.
void write_csv(std::ostream& os, const TrajectoryEnsemble& e); ///< t,x0,p0,x,p,action,jacobian

/// Parses `x,re,im`. The nodes must be uniformly spaced; the boundary
/// decides whether the last node is the right end of the domain.
ComplexField read_complex_csv(std::istream& is, Boundary boundary);

nlohmann::json to_json(const ResidualReport& r);

/// One `x,re,im` CSV per snapshot plus manifest.json
/// {"t": [...], "files": [...], "config": {...}}.
void write_snapshots(const std::filesystem::path& dir, std::span<const double> t,
                     std::span<const ComplexField> psi, const nlohmann::json& config,
                     const std::string& prefix = "snapshot");

/// Writes text to a file, creating parent directories; throws OutputError.
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace qpot
