#include "mforge/output.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace mforge {

std::string CsvWriter::quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string s = "\"";
  for (char c : field) {
    if (c == '"') s += '"';
    s += c;
  }
  return s + "\"";
}

std::string CsvWriter::number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvWriter::row(const std::vector<std::string> &fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << quote(fields[i]);
  }
  out_ << "\r\n";
}

bool in_membrane(const ProblemSpec &spec, const Configuration &config, const Vec2 &x) {
  if (spec.box.signed_distance(x) < 0.0) return false;
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (spec.shapes[i].inside(rigid_map(config.poses[i], x, true))) return false;
  }
  return true;
}

void write_vtk(std::ostream &out, const ProblemSpec &spec, const MembraneSolution &solution,
               std::string_view title) {
  const GridSpace &space = solution.field.space;
  const int nx = space.nx + 1, ny = space.ny + 1;
  std::vector<FieldSample> samples;
  std::vector<int> mask;
  std::vector<Vec2> pts;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 x = space.node_position(i, j);
      pts.push_back(x);
      samples.push_back(evaluate_field(solution.field, x));
      mask.push_back(in_membrane(spec, solution.config, x) ? 1 : 0);
    }
  }
  char buf[128];
  std::string head(title.substr(0, 200));
  for (char &c : head) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  out << "# vtk DataFile Version 3.0\n" << head << "\nASCII\nDATASET STRUCTURED_GRID\n";
  out << "DIMENSIONS " << nx << ' ' << ny << " 1\n";
  out << "POINTS " << pts.size() << " double\n";
  for (const Vec2 &x : pts) {
    std::snprintf(buf, sizeof buf, "%.10g %.10g 0\n", x[0], x[1]);
    out << buf;
  }
  out << "POINT_DATA " << pts.size() << "\n";
  auto scalars = [&](const char *name, auto fn) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t k = 0; k < pts.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.10g\n", fn(k));
      out << buf;
    }
  };
  scalars("u", [&](std::size_t k) { return samples[k].value; });
  scalars("grad_norm", [&](std::size_t k) { return samples[k].grad.norm(); });
  scalars("laplacian", [&](std::size_t k) { return samples[k].laplacian(); });
  scalars("membrane", [&](std::size_t k) { return static_cast<double>(mask[k]); });
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr)) {
    throw std::runtime_error("SHA-256 failed");
  }
  static const char *hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[digest[i] >> 4];
    s += hex[digest[i] & 15];
  }
  return s;
}

} // namespace mforge
