#include "vfp/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vfp/errors.hpp"
#include "vfp/simd/kernels.hpp"

namespace vfp {

void validate_shape(const GridShape& shape) {
  if (!(shape.Lx > 0.0) || !(shape.Lv > 0.0) || !std::isfinite(shape.Lx) || !std::isfinite(shape.Lv)) {
    throw ConfigError("grid half-widths Lx, Lv must be positive");
  }
  if (shape.nx < 3 || shape.nv < 3) throw ConfigError("grid needs at least 3 cells per direction");
}

double PhaseGrid::mass() const {
  double acc = 0.0;
  for (double value : data) acc += value;
  return acc * shape.cell_area();
}

PhaseGrid make_grid(const GridShape& shape) {
  validate_shape(shape);
  return PhaseGrid{shape, std::vector<double>(shape.cells(), 0.0), 0.0};
}

PhaseGrid sample_density(const GridShape& shape,
                         const std::function<double(double, double)>& density) {
  PhaseGrid grid = make_grid(shape);
  for (std::size_t i = 0; i < shape.nx; ++i) {
    for (std::size_t k = 0; k < shape.nv; ++k) grid.at(i, k) = density(shape.x(i), shape.v(k));
  }
  const double mass = grid.mass();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ContractViolation("sampled density has no mass on the grid");
  }
  for (double& value : grid.data) value /= mass;
  return grid;
}

void require_normalized(const PhaseGrid& grid, double tolerance) {
  if (grid.data.size() != grid.shape.cells()) throw ContractViolation("grid data size mismatch");
  const double mass = grid.mass();
  if (std::abs(mass - 1.0) > tolerance) {
    throw ContractViolation("grid mass is " + format_double(mass) + ", expected 1");
  }
}

Marginal x_marginal(const PhaseGrid& grid) {
  const GridShape& s = grid.shape;
  Marginal m;
  m.points.resize(s.nx);
  m.weights.resize(s.nx);
  const double area = s.cell_area();
  for (std::size_t i = 0; i < s.nx; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s.nv; ++k) acc += grid.at(i, k);
    m.points[i] = s.x(i);
    m.weights[i] = acc * area;
  }
  return m;
}

GridConvolution::GridConvolution(const GridShape& shape, const InteractionKernel& kernel)
    : nx_(shape.nx), k_table_(2 * shape.nx - 1), d1_table_(2 * shape.nx - 1) {
  const double dx = shape.dx();
  for (std::size_t p = 0; p < k_table_.size(); ++p) {
    const double offset = (static_cast<double>(nx_) - 1.0 - static_cast<double>(p)) * dx;
    k_table_[p] = kernel.evaluate(offset);
    d1_table_[p] = kernel.d1(offset);
    max_abs_d1_ = std::max(max_abs_d1_, std::abs(d1_table_[p]));
  }
}

std::vector<double> GridConvolution::apply(const std::vector<double>& table,
                                           const std::vector<double>& weights) const {
  if (weights.size() != nx_) throw ContractViolation("convolution weights have the wrong length");
  const auto& kernels = simd::active_kernels();
  std::vector<double> out(nx_);
  for (std::size_t i = 0; i < nx_; ++i) {
    out[i] = kernels.dot(weights.data(), table.data() + (nx_ - 1 - i), nx_);
  }
  return out;
}

std::vector<double> GridConvolution::potential(const std::vector<double>& weights) const {
  return apply(k_table_, weights);
}

std::vector<double> GridConvolution::derivative(const std::vector<double>& weights) const {
  return apply(d1_table_, weights);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

void write_grid_csv(std::ostream& out, const PhaseGrid& grid) {
  out << "x,v,f\n";
  for (std::size_t i = 0; i < grid.shape.nx; ++i) {
    for (std::size_t k = 0; k < grid.shape.nv; ++k) {
      out << format_double(grid.shape.x(i)) << ',' << format_double(grid.shape.v(k)) << ','
          << format_double(grid.at(i, k)) << '\n';
    }
  }
}

namespace {

constexpr const char* kBinaryFormat = "vfp-grid-f64le";

void put_le(std::ostream& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  char bytes[8];
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  out.write(bytes, 8);
}

double get_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw ConfigError("grid binary payload is truncated");
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_grid_binary(std::ostream& out, const PhaseGrid& grid) {
  nlohmann::ordered_json header;
  header["format"] = kBinaryFormat;
  header["Lx"] = grid.shape.Lx;
  header["Lv"] = grid.shape.Lv;
  header["nx"] = grid.shape.nx;
  header["nv"] = grid.shape.nv;
  header["t"] = grid.t;
  out << header.dump() << '\n';
  for (double value : grid.data) put_le(out, value);
}

PhaseGrid read_grid_binary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("grid binary header missing");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid binary header is not JSON: ") + e.what());
  }
  if (header.value("format", std::string{}) != kBinaryFormat) {
    throw ConfigError("unsupported grid binary format");
  }
  GridShape shape{header.at("Lx").get<double>(), header.at("Lv").get<double>(),
                  header.at("nx").get<std::size_t>(), header.at("nv").get<std::size_t>()};
  PhaseGrid grid = make_grid(shape);
  grid.t = header.at("t").get<double>();
  for (double& value : grid.data) value = get_le(in);
  return grid;
}

}  // namespace vfp
