#include "germgrain/distance_transform.hpp"

#include <limits>

namespace germgrain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform: d[k] = min_j (f[j] + (k - j)^2), via the
// lower envelope of parabolas. Sites with f[j] = +inf are skipped.
void dt1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
          std::vector<double>& z, long n) {
    int k = -1;
    for (long q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = static_cast<int>(q);
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s;
        for (;;) {
            long p = v[k];
            s = ((f[q] + q * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
            if (s > z[k]) break;
            --k;
            if (k < 0) break;
        }
        ++k;
        v[k] = static_cast<int>(q);
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) {
        for (long q = 0; q < n; ++q) d[q] = kInf;
        return;
    }
    int j = 0;
    for (long q = 0; q < n; ++q) {
        while (z[j + 1] < static_cast<double>(q)) ++j;
        double dq = static_cast<double>(q) - v[j];
        d[q] = dq * dq + f[v[j]];
    }
}

}  // namespace

std::vector<double> edt_squared_cells(const std::vector<std::uint8_t>& support,
                                      const std::vector<long>& extents) {
    long n = 1;
    for (long e : extents) {
        if (e < 1) throw std::invalid_argument("edt_squared_cells: extents must be >= 1");
        n *= e;
    }
    if (static_cast<long>(support.size()) != n)
        throw std::invalid_argument("edt_squared_cells: support size does not match extents");

    std::vector<double> dist(n);
    for (long i = 0; i < n; ++i) dist[i] = support[i] ? 0.0 : kInf;

    int d = static_cast<int>(extents.size());
    std::vector<long> strides(d, 1);
    for (int a = d - 2; a >= 0; --a) strides[a] = strides[a + 1] * extents[a + 1];

    long max_extent = 0;
    for (long e : extents) max_extent = std::max(max_extent, e);
    std::vector<double> line(max_extent), out(max_extent), z(max_extent + 1);
    std::vector<int> v(max_extent);

    for (int a = 0; a < d; ++a) {
        long e = extents[a], stride = strides[a];
        long n_pre = n / (e * stride);
        for (long pre = 0; pre < n_pre; ++pre) {
            for (long post = 0; post < stride; ++post) {
                long base = pre * e * stride + post;
                for (long k = 0; k < e; ++k) line[k] = dist[base + k * stride];
                dt1d(line, out, v, z, e);
                for (long k = 0; k < e; ++k) dist[base + k * stride] = out[k];
            }
        }
    }
    return dist;
}

std::vector<double> edt_squared_cells(const ScalarField& indicator) {
    std::vector<std::uint8_t> support(indicator.values.size());
    for (Eigen::Index i = 0; i < indicator.values.size(); ++i)
        support[i] = indicator.values[i] > 0.5 ? 1 : 0;
    return edt_squared_cells(support, indicator.grid.extents);
}

}  // namespace germgrain
