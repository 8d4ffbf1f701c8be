#include "germgrain/core.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <thread>

namespace germgrain {

Box::Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size())
        throw std::invalid_argument("Box: lo and hi must have the same dimension");
    if (lo.size() == 0) throw std::invalid_argument("Box: dimension must be positive");
    for (int a = 0; a < dim(); ++a)
        if (!(lo[a] < hi[a]))
            throw std::invalid_argument("Box: lo must be strictly below hi in every axis");
}

double Box::volume() const {
    double v = 1.0;
    for (int a = 0; a < dim(); ++a) v *= hi[a] - lo[a];
    return v;
}

bool Box::contains(const Vector& p, double tol) const {
    if (p.size() != lo.size()) return false;
    for (int a = 0; a < dim(); ++a)
        if (p[a] < lo[a] - tol || p[a] > hi[a] + tol) return false;
    return true;
}

Box Box::padded(double margin) const {
    if (margin < 0.0) throw std::invalid_argument("Box::padded: margin must be >= 0");
    return Box(lo.array() - margin, hi.array() + margin);
}

Box Box::intersect(const Box& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("Box::intersect: dimension mismatch");
    Vector l = lo.cwiseMax(other.lo), h = hi.cwiseMin(other.hi);
    for (int a = 0; a < dim(); ++a)
        if (!(l[a] < h[a])) throw std::domain_error("Box::intersect: empty intersection");
    return Box(l, h);
}

Box Box::cube(int dim, double lo, double hi) {
    return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_double(double v) {
    // %g via snprintf is locale-sensitive for the decimal point; std::to_chars
    // is not, and emits the shortest representation that round-trips.
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    auto worker = [&] {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) first_error = std::current_exception();
                return;
            }
        }
    };
    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    pool.reserve(k);
    for (std::size_t w = 0; w < k; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load() && first_error) std::rethrow_exception(first_error);
}

}  // namespace germgrain
