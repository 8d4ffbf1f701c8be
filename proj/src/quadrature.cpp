#include "germgrain/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace germgrain {

namespace {

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double adaptive_step(const Fn1D& f, double a, double b, double fa, double fm, double fb,
                     double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(fa, flm, fm, m - a);
    double right = simpson(fm, frm, fb, b - m);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const Fn1D& f, double a, double b, double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    if (b < a) return -adaptive_simpson(f, b, a, abs_tol, max_depth);
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    return adaptive_step(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), abs_tol, max_depth);
}

double adaptive_simpson_split(const Fn1D& f, double a, double b,
                              const std::vector<double>& breakpoints, double abs_tol) {
    if (b < a) return -adaptive_simpson_split(f, b, a, breakpoints, abs_tol);
    std::vector<double> pts{a};
    for (double p : breakpoints)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    double per_piece = abs_tol / static_cast<double>(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        total += adaptive_simpson(f, pts[i], pts[i + 1], per_piece);
    return total;
}

const GaussRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Newton iteration on P_n from the Chebyshev-like initial guess; standard
    // three-term recurrence gives P_n and P_n'.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return cache.emplace(n, std::move(rule)).first->second;
}

double gauss_integrate(const Fn1D& f, double a, double b, int n) {
    const GaussRule& rule = gauss_legendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

double sphere_integral(const std::function<double(const Vector&)>& f, const Vector& center,
                       double radius) {
    int d = static_cast<int>(center.size());
    if (radius < 0.0) throw std::invalid_argument("sphere_integral: radius must be >= 0");
    if (radius == 0.0) return 0.0;
    if (d == 2) {
        constexpr int kAngles = 128;
        double sum = 0.0;
        Vector p(2);
        for (int i = 0; i < kAngles; ++i) {
            double phi = 2.0 * M_PI * i / kAngles;
            p[0] = center[0] + radius * std::cos(phi);
            p[1] = center[1] + radius * std::sin(phi);
            sum += f(p);
        }
        return sum * (2.0 * M_PI * radius / kAngles);
    }
    if (d == 3) {
        constexpr int kPolar = 32, kAzimuth = 64;
        const GaussRule& rule = gauss_legendre(kPolar);
        double sum = 0.0;
        Vector p(3);
        for (int i = 0; i < kPolar; ++i) {
            double mu = rule.nodes[i];  // cos(theta)
            double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
            double ring = 0.0;
            for (int j = 0; j < kAzimuth; ++j) {
                double phi = 2.0 * M_PI * j / kAzimuth;
                p[0] = center[0] + radius * st * std::cos(phi);
                p[1] = center[1] + radius * st * std::sin(phi);
                p[2] = center[2] + radius * mu;
                ring += f(p);
            }
            sum += rule.weights[i] * ring * (2.0 * M_PI / kAzimuth);
        }
        return sum * radius * radius;
    }
    throw std::invalid_argument("sphere_integral: only d = 2, 3 supported");
}

double ball_integral(const std::function<double(const Vector&)>& f, const Vector& center,
                     double radius) {
    if (radius < 0.0) throw std::invalid_argument("ball_integral: radius must be >= 0");
    if (radius == 0.0) return 0.0;
    return gauss_integrate([&](double r) { return sphere_integral(f, center, r); }, 0.0, radius,
                           64);
}

}  // namespace germgrain
