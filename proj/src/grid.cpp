#include "germgrain/grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace germgrain {

static_assert(std::endian::native == std::endian::little,
              "raw field I/O assumes a little-endian host");

Grid Grid::over(const Box& window, double h) {
    if (!(h > 0.0)) throw ConfigError("grid.spacing: must be > 0");
    Grid g;
    g.window = window;
    g.spacing = h;
    int d = window.dim();
    g.extents.resize(d);
    for (int a = 0; a < d; ++a) {
        double len = window.hi[a] - window.lo[a];
        double cells = len / h;
        double rounded = std::round(cells);
        if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells) || rounded < 1.0)
            throw ConfigError("grid.spacing: window length " + format_double(len) + " on axis " +
                              std::to_string(a) + " is not a positive integer multiple of h = " +
                              format_double(h));
        g.extents[a] = static_cast<long>(rounded) + 1;
    }
    g.strides.assign(d, 1);
    for (int a = d - 2; a >= 0; --a) g.strides[a] = g.strides[a + 1] * g.extents[a + 1];
    return g;
}

long Grid::size() const {
    long n = 1;
    for (long e : extents) n *= e;
    return n;
}

Vector Grid::node(long lin) const {
    Vector p(dim());
    for (int a = 0; a < dim(); ++a) {
        long i = (lin / strides[a]) % extents[a];
        p[a] = window.lo[a] + spacing * static_cast<double>(i);
    }
    return p;
}

std::vector<long> Grid::multi_index(long lin) const {
    std::vector<long> mi(dim());
    for (int a = 0; a < dim(); ++a) mi[a] = (lin / strides[a]) % extents[a];
    return mi;
}

long Grid::linear_index(const std::vector<long>& mi) const {
    long lin = 0;
    for (int a = 0; a < dim(); ++a) lin += mi[a] * strides[a];
    return lin;
}

long Grid::nearest(const Vector& p) const {
    long lin = 0;
    for (int a = 0; a < dim(); ++a) {
        double s = (p[a] - window.lo[a]) / spacing;
        long i = static_cast<long>(std::lround(s));
        if (i < 0 || i >= extents[a] || std::abs(s - static_cast<double>(i)) > 0.5 + 1e-9)
            throw std::domain_error("Grid::nearest: point lies outside the grid window");
        lin += i * strides[a];
    }
    return lin;
}

bool Grid::contains_node_point(const Vector& p) const {
    return window.contains(p, 1e-9 * spacing);
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim(); ++a) v *= spacing;
    return v;
}

ScalarField ScalarField::zeros(const Grid& g) {
    ScalarField f;
    f.grid = g;
    f.values = Eigen::ArrayXd::Zero(g.size());
    return f;
}

ScalarField ScalarField::constant(const Grid& g, double v) {
    ScalarField f;
    f.grid = g;
    f.values = Eigen::ArrayXd::Constant(g.size(), v);
    return f;
}

double box_integral(const ScalarField& field, const Box& A) {
    const Grid& g = field.grid;
    double sum = 0.0;
    double tol = 1e-9 * g.spacing;
    for (long i = 0; i < g.size(); ++i)
        if (A.contains(g.node(i), tol)) sum += field.values[i];
    return sum * g.cell_volume();
}

long box_node_count(const Grid& g, const Box& A) {
    long n = 0;
    double tol = 1e-9 * g.spacing;
    for (long i = 0; i < g.size(); ++i)
        if (A.contains(g.node(i), tol)) ++n;
    return n;
}

namespace {

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

}  // namespace

void write_field_raw(const ScalarField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_field_raw: cannot open " + path);
    const Grid& g = field.grid;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
    for (long e : g.extents) put<std::uint64_t>(out, static_cast<std::uint64_t>(e));
    put<double>(out, g.spacing);
    for (int a = 0; a < g.dim(); ++a) put<double>(out, g.window.lo[a]);
    for (int a = 0; a < g.dim(); ++a) put<double>(out, g.window.hi[a]);
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(sizeof(double) * field.values.size()));
    if (!out) throw std::runtime_error("write_field_raw: short write to " + path);
}

ScalarField read_field_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_field_raw: cannot open " + path);
    auto d = get<std::uint32_t>(in);
    if (!in || d < 1 || d > 8) throw std::runtime_error("read_field_raw: bad dimension in " + path);
    std::vector<long> extents(d);
    for (auto& e : extents) e = static_cast<long>(get<std::uint64_t>(in));
    double h = get<double>(in);
    Vector lo(d), hi(d);
    for (std::uint32_t a = 0; a < d; ++a) lo[a] = get<double>(in);
    for (std::uint32_t a = 0; a < d; ++a) hi[a] = get<double>(in);
    if (!in) throw std::runtime_error("read_field_raw: truncated header in " + path);
    Grid g = Grid::over(Box(lo, hi), h);
    if (g.extents != extents)
        throw std::runtime_error("read_field_raw: extents inconsistent with window/spacing in " +
                                 path);
    ScalarField f = ScalarField::zeros(g);
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(sizeof(double) * f.values.size()));
    if (!in) throw std::runtime_error("read_field_raw: truncated payload in " + path);
    return f;
}

}  // namespace germgrain
