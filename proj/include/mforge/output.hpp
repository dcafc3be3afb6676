#pragma once

#include "mforge/solve.hpp"

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mforge {

/// RFC 4180 writer: CRLF line ends, fields quoted only when they contain a
/// comma, quote, CR or LF.
class CsvWriter {
public:
  explicit CsvWriter(std::ostream &out) : out_(out) {}

  void row(const std::vector<std::string> &fields);
  void row(std::initializer_list<std::string> fields) { row(std::vector<std::string>(fields)); }

  static std::string quote(std::string_view field);
  /// Shortest text that round-trips, via %.17g.
  static std::string number(double v);

private:
  std::ostream &out_;
};

/// True when x lies in the membrane domain of the configuration.
bool in_membrane(const ProblemSpec &spec, const Configuration &config, const Vec2 &x);

/// Legacy VTK (ASCII) structured grid over the grid nodes with point data
/// u, |grad u|, Lap u and a 0/1 membrane mask.
void write_vtk(std::ostream &out, const ProblemSpec &spec, const MembraneSolution &solution,
               std::string_view title);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

} // namespace mforge
