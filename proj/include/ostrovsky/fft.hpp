#pragma once

// Thin FFTW wrapper. Plans are created once per shape under a lock (the FFTW
// planner is not thread-safe) and executed with the new-array interface, which is.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

namespace ostrovsky::fft {

using cplx = std::complex<double>;

namespace detail {

inline fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
inline fftw_complex* as_fftw(const cplx* p) {
    // out-of-place complex DFTs leave their input untouched
    return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
}

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int n0, int n1, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(n0, n1, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        const std::size_t total = static_cast<std::size_t>(n0) * static_cast<std::size_t>(n1 > 0 ? n1 : 1);
        std::vector<cplx> in(total), out(total);
        constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = n1 > 0
            ? fftw_plan_dft_2d(n0, n1, as_fftw(in.data()), as_fftw(out.data()), sign, flags)
            : fftw_plan_dft_1d(n0, as_fftw(in.data()), as_fftw(out.data()), sign, flags);
        plans_.emplace(key, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void execute(std::span<const cplx> in, std::span<cplx> out, int n0, int n1, int sign) {
    fftw_plan plan = PlanCache::instance().get(n0, n1, sign);
    fftw_execute_dft(plan, as_fftw(in.data()), as_fftw(out.data()));
}

}  // namespace detail

/// Unnormalized forward DFT, out[k] = sum_m in[m] exp(-2 pi i k m / n).
inline std::vector<cplx> forward(std::span<const cplx> in) {
    std::vector<cplx> out(in.size());
    detail::execute(in, out, static_cast<int>(in.size()), 0, FFTW_FORWARD);
    return out;
}

/// Unnormalized inverse DFT (positive exponent).
inline std::vector<cplx> backward(std::span<const cplx> in) {
    std::vector<cplx> out(in.size());
    detail::execute(in, out, static_cast<int>(in.size()), 0, FFTW_BACKWARD);
    return out;
}

/// Row-major 2-D transforms of an n0 x n1 array.
inline std::vector<cplx> forward_2d(std::span<const cplx> in, int n0, int n1) {
    std::vector<cplx> out(in.size());
    detail::execute(in, out, n0, n1, FFTW_FORWARD);
    return out;
}

inline std::vector<cplx> backward_2d(std::span<const cplx> in, int n0, int n1) {
    std::vector<cplx> out(in.size());
    detail::execute(in, out, n0, n1, FFTW_BACKWARD);
    return out;
}

}  // namespace ostrovsky::fft
