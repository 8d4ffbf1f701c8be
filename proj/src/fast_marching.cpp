#include "germgrain/fast_marching.hpp"

#include <cmath>
#include <queue>

namespace germgrain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Solve sum_a max(tau - d_a, 0)^2 = rhs2 given the available upwind values
// (ascending); returns the viable upwind solution.
double solve_update(std::vector<double>& d, double rhs2) {
    std::sort(d.begin(), d.end());
    double tau = d[0] + std::sqrt(rhs2);
    if (d.size() == 1 || tau <= d[1]) return tau;
    for (std::size_t k = 2; k <= d.size(); ++k) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            sum += d[i];
            sum2 += d[i] * d[i];
        }
        double kk = static_cast<double>(k);
        double disc = sum * sum - kk * (sum2 - rhs2);
        if (disc < 0.0) break;  // fall back to the best previous candidate
        tau = (sum + std::sqrt(disc)) / kk;
        if (k == d.size() || tau <= d[k]) return tau;
    }
    return tau;
}

}  // namespace

Eigen::ArrayXd solve_eikonal(const Grid& grid, const Eigen::ArrayXd& speed, long source) {
    const long n = grid.size();
    if (speed.size() != n) throw std::invalid_argument("solve_eikonal: speed size mismatch");
    if (source < 0 || source >= n) throw std::domain_error("solve_eikonal: source outside grid");
    for (long i = 0; i < n; ++i)
        if (!(speed[i] > 0.0) || !std::isfinite(speed[i]))
            throw std::invalid_argument("solve_eikonal: speed must be positive and finite");

    Eigen::ArrayXd tau = Eigen::ArrayXd::Constant(n, kInf);
    std::vector<std::uint8_t> frozen(n, 0);
    const int d = grid.dim();
    const double h = grid.spacing;

    using Entry = std::pair<double, long>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;

    tau[source] = 0.0;
    heap.emplace(0.0, source);

    std::vector<double> avail;
    avail.reserve(d);
    std::vector<long> mi;

    while (!heap.empty()) {
        auto [t, i] = heap.top();
        heap.pop();
        if (frozen[i] || t != tau[i]) continue;  // stale entry
        frozen[i] = 1;
        mi = grid.multi_index(i);
        for (int a = 0; a < d; ++a) {
            for (int dir : {-1, +1}) {
                long ia = mi[a] + dir;
                if (ia < 0 || ia >= grid.extents[a]) continue;
                long j = i + dir * grid.strides[a];
                if (frozen[j]) continue;
                // Recompute the update for j from its frozen axis minima.
                avail.clear();
                auto mj = grid.multi_index(j);
                for (int b = 0; b < d; ++b) {
                    double best = kInf;
                    if (mj[b] > 0 && frozen[j - grid.strides[b]])
                        best = tau[j - grid.strides[b]];
                    if (mj[b] + 1 < grid.extents[b] && frozen[j + grid.strides[b]])
                        best = std::min(best, tau[j + grid.strides[b]]);
                    if (best < kInf) avail.push_back(best);
                }
                if (avail.empty()) continue;
                double rhs = h / speed[j];
                double cand = solve_update(avail, rhs * rhs);
                if (cand < tau[j]) {
                    tau[j] = cand;
                    heap.emplace(cand, j);
                }
            }
        }
    }
    return tau;
}

double eikonal_residual(const Grid& grid, const Eigen::ArrayXd& speed, const Eigen::ArrayXd& tau,
                        long source) {
    const int d = grid.dim();
    const double h = grid.spacing;
    double worst = 0.0;
    for (long i = 0; i < grid.size(); ++i) {
        if (i == source) continue;
        auto mi = grid.multi_index(i);
        double lhs = 0.0;
        for (int a = 0; a < d; ++a) {
            double best = kInf;
            if (mi[a] > 0) best = tau[i - grid.strides[a]];
            if (mi[a] + 1 < grid.extents[a]) best = std::min(best, tau[i + grid.strides[a]]);
            double diff = tau[i] - best;
            if (diff > 0.0 && best < kInf) lhs += diff * diff;
        }
        double rhs = (h / speed[i]) * (h / speed[i]);
        worst = std::max(worst, std::abs(lhs - rhs) / rhs);
    }
    return worst;
}

}  // namespace germgrain
