#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "coordinate.hpp"
#include "errors.hpp"
#include "kernels.hpp"

namespace bicforge {

enum class CurveFormat { csv, text };

namespace detail {

inline std::ostream& fixed17(std::ostream& os) {
  os << std::setprecision(17) << std::defaultfloat;
  return os;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  fixed17(os);
  return os;
}

inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << m(i, j);
    }
    os << '\n';
  }
}

inline const char* symmetry_name(Symmetry s) { return s == Symmetry::symmetric ? "symmetric" : "general"; }

}  // namespace detail

// #grid n c Lambda / #space momentum / #symmetry, then node,weight lines and the n x n values
inline void write_kernel(const std::filesystem::path& p, const Kernel& v) {
  auto os = detail::open_out(p);
  const auto& g = v.grid;
  os << "#grid " << g.size() << ' ' << g.map_scale << ' ' << g.cutoff << '\n';
  os << "#space momentum\n";
  os << "#symmetry " << detail::symmetry_name(v.symmetry) << '\n';
  for (Eigen::Index i = 0; i < g.size(); ++i) os << g.nodes(i) << ',' << g.weights(i) << '\n';
  detail::write_matrix(os, v.values);
}

// radial grids carry n and r_max only: #grid n r_max
inline void write_kernel(const std::filesystem::path& p, const CoordinateKernel& v) {
  auto os = detail::open_out(p);
  const auto& g = v.grid;
  os << "#grid " << g.size() << ' ' << g.r_max << '\n';
  os << "#space coordinate\n";
  os << "#symmetry " << (is_numerically_symmetric<double>(v.values) ? "symmetric" : "general") << '\n';
  for (Eigen::Index i = 0; i < g.size(); ++i) os << g.nodes(i) << ',' << g.weights(i) << '\n';
  detail::write_matrix(os, v.values);
}

struct KernelFile {
  std::string space;  // momentum or coordinate
  Symmetry symmetry = Symmetry::general;
  std::vector<double> grid_params;
  Eigen::VectorXd nodes, weights;
  Eigen::MatrixXd values;
};

inline KernelFile read_kernel_file(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot read " + p.string());
  KernelFile f;
  std::string line;
  long n = -1;
  bool have_space = false, have_sym = false;
  auto bad = [&](const std::string& why) { return IoError(p.string() + ": " + why); };
  while (is.peek() == '#' && std::getline(is, line)) {
    std::istringstream ls(line.substr(1));
    std::string key;
    ls >> key;
    if (key == "grid") {
      ls >> n;
      double x;
      while (ls >> x) f.grid_params.push_back(x);
    } else if (key == "space") {
      ls >> f.space;
      have_space = true;
    } else if (key == "symmetry") {
      std::string s;
      ls >> s;
      if (s == "symmetric")
        f.symmetry = Symmetry::symmetric;
      else if (s != "general")
        throw bad("unknown symmetry '" + s + "'");
      have_sym = true;
    } else {
      throw bad("unknown header '" + key + "'");
    }
  }
  if (n <= 0 || !have_space || !have_sym) throw bad("missing #grid, #space or #symmetry header");
  if (f.space != "momentum" && f.space != "coordinate") throw bad("unknown space '" + f.space + "'");
  f.nodes.resize(n);
  f.weights.resize(n);
  for (long i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw bad("truncated node list");
    std::istringstream ls(line);
    char comma = 0;
    if (!(ls >> f.nodes(i) >> comma >> f.weights(i)) || comma != ',') throw bad("bad node line " + std::to_string(i));
  }
  f.values.resize(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (!(is >> f.values(i, j))) throw bad("truncated value block");
  double extra;
  if (is >> extra) throw bad("trailing data after the value block");
  return f;
}

// The grid is rebuilt from the header and checked against the stored nodes and weights.
// Kernels read from disk carry no off-grid continuation.
inline Kernel read_kernel(const std::filesystem::path& p) {
  const KernelFile f = read_kernel_file(p);
  if (f.space != "momentum") throw IoError(p.string() + ": expected a momentum-space kernel");
  if (f.grid_params.size() != 2) throw IoError(p.string() + ": #grid needs n c Lambda");
  Kernel v;
  v.grid = build_momentum_grid(static_cast<int>(f.nodes.size()), f.grid_params[0], f.grid_params[1]);
  const double dn = ((v.grid.nodes - f.nodes).array().abs() / v.grid.nodes.array()).maxCoeff();
  const double dw = ((v.grid.weights - f.weights).array().abs() / v.grid.weights.array()).maxCoeff();
  if (!(dn <= 1e-13 && dw <= 1e-13)) throw IoError(p.string() + ": stored nodes do not match the #grid header");
  v.values = f.values;
  v.symmetry = f.symmetry;
  if (v.symmetry == Symmetry::symmetric && !is_numerically_symmetric<double>(v.values))
    throw IoError(p.string() + ": kernel marked symmetric is not");
  return v;
}

// Column-major curve table. csv: comma header and rows; text: '#'-prefixed header, spaces.
struct Curve {
  std::vector<std::string> columns;
  std::vector<Eigen::VectorXd> data;
};

inline std::filesystem::path curve_path(const std::filesystem::path& stem, CurveFormat fmt) {
  auto p = stem;
  p += fmt == CurveFormat::csv ? ".csv" : ".txt";
  return p;
}

inline std::filesystem::path write_curve(const std::filesystem::path& stem, const Curve& c,
                                         CurveFormat fmt = CurveFormat::csv) {
  if (c.columns.size() != c.data.size() || c.data.empty()) throw ShapeError("write_curve: column mismatch");
  const auto rows = c.data.front().size();
  for (const auto& d : c.data)
    if (d.size() != rows) throw ShapeError("write_curve: ragged columns");
  const auto p = curve_path(stem, fmt);
  auto os = detail::open_out(p);
  const char sep = fmt == CurveFormat::csv ? ',' : ' ';
  if (fmt == CurveFormat::text) os << "# ";
  for (std::size_t j = 0; j < c.columns.size(); ++j) os << (j ? std::string(1, sep) : "") << c.columns[j];
  os << '\n';
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < c.data.size(); ++j) {
      if (j) os << sep;
      os << c.data[j](i);
    }
    os << '\n';
  }
  return p;
}

}  // namespace bicforge
