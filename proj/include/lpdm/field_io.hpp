#pragma once

#include "lpdm/sphere_grid.hpp"

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace lpdm {

/// Text dump of a grid field:
///
///   # lpdm-field v1
///   # grid S2:level=4
///   # nodes 2562
///   # fingerprint 0123456789abcdef
///   # <key> <value>          (any number of metadata lines)
///   0 1.0000000000000000
///   ...
///
/// Values use 17 significant digits, so a read gives back the same doubles.
struct FieldFile {
  std::string grid_spec;
  int nodes = 0;
  std::uint64_t fingerprint = 0;
  std::map<std::string, std::string> meta;
  Eigen::VectorXd values;
};

void write_field(std::ostream& out, const ScalarField& field,
                 const std::map<std::string, std::string>& meta = {});

/// Throws PreconditionError on malformed input.
FieldFile read_field(std::istream& in);
FieldFile read_field_file(const std::string& path);

/// Inverse of Grid::spec(): "S1:nodes=<N>" or "S2:level=<L>".
GridPtr grid_from_spec(const std::string& spec);

/// Rebuilds the field on its grid, checking node count and fingerprint.
ScalarField to_field(const FieldFile& file);
/// Same, on a grid the caller already has.
ScalarField to_field(const FieldFile& file, GridPtr grid);

/// "%.17g".
std::string format_double(double value);

}  // namespace lpdm
