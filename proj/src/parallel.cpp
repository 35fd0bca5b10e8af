#include "rbsde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace rbsde {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f) {
    int t = std::min<std::size_t>(static_cast<std::size_t>(resolve_threads(threads)), std::max<std::size_t>(n, 1));
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    constexpr std::size_t kChunk = 16;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t begin = next.fetch_add(kChunk);
            if (begin >= n) return;
            std::size_t end = std::min(n, begin + kChunk);
            try {
                for (std::size_t i = begin; i < end; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (int k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

double compensated_sum(const std::vector<double>& xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) comp += (sum - t) + x;
        else comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

Estimate summarize(const std::vector<double>& xs, double t_max) {
    Estimate e;
    e.n_paths = static_cast<long>(xs.size());
    e.t_max = t_max;
    if (xs.empty()) return e;
    double n = static_cast<double>(xs.size());
    e.value = compensated_sum(xs) / n;
    if (xs.size() > 1) {
        std::vector<double> sq(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - e.value) * (xs[i] - e.value);
        e.std_error = std::sqrt(compensated_sum(sq) / (n - 1.0) / n);
    }
    return e;
}

Estimate summarize_weighted(const std::vector<double>& log_w, const std::vector<double>& f, double t_max) {
    double shift = -std::numeric_limits<double>::infinity();
    for (double l : log_w) shift = std::max(shift, l);
    if (!std::isfinite(shift)) shift = 0.0;
    std::vector<double> terms(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) terms[i] = std::exp(log_w[i] - shift) * f[i];
    Estimate e = summarize(terms, t_max);
    double scale = std::exp(shift);
    e.value *= scale;
    e.std_error *= scale;
    return e;
}

}  // namespace rbsde
