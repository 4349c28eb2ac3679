#include "qpot/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qpot {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_shortest(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, const RealField& f) {
  os << "x,value\n";
  for (std::size_t i = 0; i < f.size(); ++i) os << format_g17(f.coord(i)) << ',' << format_g17(f[i]) << '\n';
}

void write_csv(std::ostream& os, const ComplexField& f) {
  os << "x,re,im\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    os << format_g17(f.coord(i)) << ',' << format_g17(f[i].real()) << ',' << format_g17(f[i].imag()) << '\n';
  }
}

void write_csv(std::ostream& os, const MadelungFields& f) {
  os << "x,rho,phi,q,mask\n";
  for (std::size_t i = 0; i < f.rho.size(); ++i) {
    os << format_g17(f.rho.coord(i)) << ',' << format_g17(f.rho[i]) << ',' << format_g17(f.phi[i]) << ','
       << format_g17(f.q[i]) << ',' << (f.mask[i] ? 1 : 0) << '\n';
  }
}

void write_csv(std::ostream& os, const ModeCoefficients& c) {
  os << "k,re,im,abs2\n";
  for (std::size_t k = 0; k < c.c.size(); ++k) {
    os << k << ',' << format_g17(c.c[k].real()) << ',' << format_g17(c.c[k].imag()) << ','
       << format_g17(std::norm(c.c[k])) << '\n';
  }
}

void write_csv(std::ostream& os, const TrajectoryEnsemble& e) {
  os << "t,x0,p0,x,p,action,jacobian\n";
  for (std::size_t s = 0; s < e.t.size(); ++s) {
    for (const auto& tr : e.trajectories) {
      const auto& smp = tr.samples[s];
      os << format_g17(e.t[s]) << ',' << format_g17(tr.x0) << ',' << format_g17(tr.p0) << ',' << format_g17(smp.x)
         << ',' << format_g17(smp.p) << ',' << format_g17(smp.action) << ',' << format_g17(smp.jacobian) << '\n';
    }
  }
}

namespace {

double parse_number(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e || !std::isfinite(v)) {
    throw CsvError(line, "not a finite number: '" + cell + "'");
  }
  return v;
}

}  // namespace

ComplexField read_complex_csv(std::istream& is, Boundary boundary) {
  std::string text;
  std::size_t line = 0;
  if (!std::getline(is, text)) throw CsvError(1, "empty input");
  ++line;
  if (!text.empty() && text.back() == '\r') text.pop_back();
  if (text != "x,re,im") throw CsvError(line, "expected header 'x,re,im'");

  std::vector<double> xs;
  std::vector<cplx> vals;
  while (std::getline(is, text)) {
    ++line;
    if (text.empty() || text == "\r") continue;
    std::vector<std::string> cells;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 3) throw CsvError(line, "expected 3 columns, got " + std::to_string(cells.size()));
    xs.push_back(parse_number(cells[0], line));
    vals.emplace_back(parse_number(cells[1], line), parse_number(cells[2], line));
  }
  if (xs.size() < kMinGridPoints) throw CsvError(line, "too few rows for a grid");
  const double dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double expect = xs.front() + static_cast<double>(i) * dx;
    if (std::abs(xs[i] - expect) > 1e-9 * std::max(1.0, std::abs(dx) * static_cast<double>(xs.size()))) {
      throw CsvError(i + 2, "nodes are not uniformly spaced");
    }
  }
  const double xmax = boundary == Boundary::periodic ? xs.back() + dx : xs.back();
  return ComplexField(Grid1D(xs.front(), xmax, xs.size(), boundary), std::move(vals));
}

nlohmann::json to_json(const ResidualReport& r) {
  return nlohmann::json{{"max_abs", r.max_abs}, {"l2", r.l2}, {"masked_fraction", r.masked_fraction}};
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::error_code ec;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
  if (ec) throw OutputError("cannot create " + file.parent_path().string() + ": " + ec.message());
  std::ofstream os(file, std::ios::binary);
  if (!os) throw OutputError("cannot open " + file.string() + " for writing");
  os << text;
  if (!os) throw OutputError("failed writing " + file.string());
}

void write_snapshots(const std::filesystem::path& dir, std::span<const double> t,
                     std::span<const ComplexField> psi, const nlohmann::json& config, const std::string& prefix) {
  nlohmann::json manifest;
  manifest["t"] = nlohmann::json::array();
  manifest["files"] = nlohmann::json::array();
  for (std::size_t s = 0; s < psi.size(); ++s) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%05zu.csv", prefix.c_str(), s);
    std::ostringstream os;
    write_csv(os, psi[s]);
    write_text(dir / name, os.str());
    manifest["t"].push_back(t[s]);
    manifest["files"].push_back(name);
  }
  manifest["config"] = config;
  write_text(dir / (prefix == "snapshot" ? std::string("manifest.json") : prefix + "_manifest.json"),
             manifest.dump(2) + "\n");
}

}  // namespace qpot
