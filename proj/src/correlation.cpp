#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "seqal/error.hpp"
#include "seqal/metrics.hpp"

namespace seqal::metrics {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("correlation inputs differ in length");
    if (x.size() < 2) throw DomainError("correlation needs at least two points");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DomainError("non-finite correlation input");
}

std::int64_t pairs(std::int64_t t) { return t * (t - 1) / 2; }

// Counts inversions of v while merge-sorting it.
std::int64_t count_inversions(std::vector<double>& v) {
    std::vector<double> buf(v.size());
    std::int64_t swaps = 0;
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, v.size());
            const std::size_t hi = std::min(lo + 2 * width, v.size());
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    swaps += static_cast<std::int64_t>(mid - i);
                    buf[k++] = v[j++];
                } else {
                    buf[k++] = v[i++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
        }
        v.swap(buf);
    }
    return swaps;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = (double(i + 1) + double(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const double n = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });

    std::int64_t tied_x = 0, tied_xy = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        tied_x += pairs(std::int64_t(j - i + 1));
        for (std::size_t a = i; a <= j;) {
            std::size_t b = a;
            while (b + 1 <= j && y[idx[b + 1]] == y[idx[a]]) ++b;
            tied_xy += pairs(std::int64_t(b - a + 1));
            a = b + 1;
        }
        i = j + 1;
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
    const std::int64_t swaps = count_inversions(ys);  // ys is now sorted

    std::int64_t tied_y = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && ys[j + 1] == ys[i]) ++j;
        tied_y += pairs(std::int64_t(j - i + 1));
        i = j + 1;
    }

    const std::int64_t total = pairs(std::int64_t(n));
    const std::int64_t s = total - tied_x - tied_y + tied_xy - 2 * swaps;
    const std::int64_t dx = total - tied_x, dy = total - tied_y;
    if (dx == 0 || dy == 0) return std::nullopt;
    return std::clamp(double(s) / std::sqrt(double(dx) * double(dy)), -1.0, 1.0);
}

Correlation correlations(std::span<const double> x, std::span<const double> y) {
    return {pearson(x, y), spearman(x, y), kendall_tau_b(x, y)};
}

}  // namespace seqal::metrics
