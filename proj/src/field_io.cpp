#include "lpdm/field_io.hpp"

#include "lpdm/errors.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace lpdm {

namespace {

constexpr const char* kMagic = "# lpdm-field v1";

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_field(std::ostream& out, const ScalarField& field,
                 const std::map<std::string, std::string>& meta) {
  const Grid& grid = field.grid();
  out << kMagic << '\n';
  out << "# grid " << grid.spec() << '\n';
  out << "# nodes " << grid.size() << '\n';
  out << "# fingerprint " << hex64(grid.fingerprint()) << '\n';
  for (const auto& [key, value] : meta) out << "# " << key << ' ' << value << '\n';
  for (int i = 0; i < field.size(); ++i) out << i << ' ' << format_double(field[i]) << '\n';
}

FieldFile read_field(std::istream& in) {
  FieldFile file;
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw PreconditionError("not a field file (missing '" + std::string(kMagic) + "' header)");
  }
  std::vector<double> values;
  bool have_grid = false;
  bool have_nodes = false;
  bool have_fingerprint = false;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string key;
      header >> key;
      std::string value;
      std::getline(header >> std::ws, value);
      if (key == "grid") {
        file.grid_spec = value;
        have_grid = true;
      } else if (key == "nodes") {
        file.nodes = std::stoi(value);
        have_nodes = true;
      } else if (key == "fingerprint") {
        file.fingerprint = std::stoull(value, nullptr, 16);
        have_fingerprint = true;
      } else {
        file.meta[key] = value;
      }
      continue;
    }
    std::istringstream row(line);
    long index = -1;
    double v = 0.0;
    if (!(row >> index >> v) || index != static_cast<long>(values.size())) {
      throw PreconditionError("field file line " + std::to_string(line_no) +
                              ": expected '<index> <value>' in node order");
    }
    values.push_back(v);
  }
  if (!have_grid || !have_nodes || !have_fingerprint) {
    throw PreconditionError("field file is missing the grid, nodes or fingerprint header");
  }
  if (static_cast<int>(values.size()) != file.nodes) {
    throw PreconditionError("field file declares " + std::to_string(file.nodes) + " nodes but has " +
                            std::to_string(values.size()) + " values");
  }
  file.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return file;
}

FieldFile read_field_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read field file " + path);
  return read_field(in);
}

GridPtr grid_from_spec(const std::string& spec) {
  int value = 0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "S1:nodes=%d%c", &value, &tail) == 1) return build_grid(2, value);
  if (std::sscanf(spec.c_str(), "S2:level=%d%c", &value, &tail) == 1) return build_grid(3, value);
  throw PreconditionError("unrecognised grid spec '" + spec + "'");
}

ScalarField to_field(const FieldFile& file) { return to_field(file, grid_from_spec(file.grid_spec)); }

ScalarField to_field(const FieldFile& file, GridPtr grid) {
  if (grid->spec() != file.grid_spec || grid->size() != file.nodes) {
    throw PreconditionError("field file is for grid " + file.grid_spec + ", expected " + grid->spec());
  }
  if (grid->fingerprint() != file.fingerprint) {
    throw PreconditionError("field file fingerprint " + hex64(file.fingerprint) +
                            " does not match grid " + grid->spec() + " (" +
                            hex64(grid->fingerprint()) + ")");
  }
  return ScalarField(std::move(grid), file.values);
}

}  // namespace lpdm
