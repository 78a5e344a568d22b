#include "graphtcn/kernels.hpp"

#include <atomic>

#ifdef GTCN_HAVE_OPENMP
#include <omp.h>
#endif

namespace gtcn::kernels {

namespace {

std::atomic<std::size_t> g_threshold{std::size_t{1} << 15};

// Each body computes every output owned by one outer index. The serial and
// OpenMP variants differ only in how the outer loop is distributed.

inline void affine_forward_row(std::span<const double> x, std::span<const double> w,
                               std::span<const double> bias, std::span<double> y, AffineDims d,
                               std::size_t r) {
    double* yr = y.data() + r * d.out;
    const double* xr = x.data() + r * d.in;
    if (bias.empty()) {
        for (std::size_t j = 0; j < d.out; ++j) yr[j] = 0.0;
    } else {
        for (std::size_t j = 0; j < d.out; ++j) yr[j] = bias[j];
    }
    for (std::size_t i = 0; i < d.in; ++i) {
        const double xi = xr[i];
        const double* wi = w.data() + i * d.out;
        for (std::size_t j = 0; j < d.out; ++j) yr[j] += xi * wi[j];
    }
}

inline void affine_backward_input_row(std::span<const double> dy, std::span<const double> w,
                                      std::span<double> dx, AffineDims d, std::size_t r) {
    const double* dyr = dy.data() + r * d.out;
    double* dxr = dx.data() + r * d.in;
    for (std::size_t i = 0; i < d.in; ++i) {
        const double* wi = w.data() + i * d.out;
        double s = 0.0;
        for (std::size_t j = 0; j < d.out; ++j) s += dyr[j] * wi[j];
        dxr[i] += s;
    }
}

inline void affine_backward_weight_row(std::span<const double> x, std::span<const double> dy,
                                       std::span<double> dw, AffineDims d, std::size_t i) {
    double* dwi = dw.data() + i * d.out;
    for (std::size_t r = 0; r < d.rows; ++r) {
        const double xi = x[r * d.in + i];
        const double* dyr = dy.data() + r * d.out;
        for (std::size_t j = 0; j < d.out; ++j) dwi[j] += xi * dyr[j];
    }
}

inline void conv1d_forward_row(std::span<const double> x, std::span<const double> w,
                               std::span<const double> bias, std::span<double> y, ConvDims d,
                               std::size_t bc) {
    const std::size_t b = bc / d.c_out;
    const std::size_t c = bc % d.c_out;
    double* yrow = y.data() + bc * d.length;
    for (std::size_t t = 0; t < d.length; ++t) {
        double s = bias.empty() ? 0.0 : bias[c];
        for (std::size_t ci = 0; ci < d.c_in; ++ci) {
            const double* xrow = x.data() + (b * d.c_in + ci) * d.length;
            const double* wrow = w.data() + (c * d.c_in + ci) * d.kernel;
            for (std::size_t tau = 0; tau < d.kernel; ++tau) {
                const std::size_t back = (d.kernel - 1 - tau) * d.dilation;
                if (back > t) continue;
                s += wrow[tau] * xrow[t - back];
            }
        }
        yrow[t] = s;
    }
}

inline void conv1d_backward_input_row(std::span<const double> dy, std::span<const double> w,
                                      std::span<double> dx, ConvDims d, std::size_t bci) {
    const std::size_t b = bci / d.c_in;
    const std::size_t ci = bci % d.c_in;
    double* dxrow = dx.data() + bci * d.length;
    for (std::size_t s = 0; s < d.length; ++s) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d.c_out; ++c) {
            const double* dyrow = dy.data() + (b * d.c_out + c) * d.length;
            const double* wrow = w.data() + (c * d.c_in + ci) * d.kernel;
            for (std::size_t tau = 0; tau < d.kernel; ++tau) {
                const std::size_t t = s + (d.kernel - 1 - tau) * d.dilation;
                if (t >= d.length) continue;
                acc += wrow[tau] * dyrow[t];
            }
        }
        dxrow[s] += acc;
    }
}

inline void conv1d_backward_weight_row(std::span<const double> x, std::span<const double> dy,
                                       std::span<double> dw, ConvDims d, std::size_t cci) {
    const std::size_t c = cci / d.c_in;
    const std::size_t ci = cci % d.c_in;
    double* dwrow = dw.data() + cci * d.kernel;
    for (std::size_t tau = 0; tau < d.kernel; ++tau) {
        const std::size_t back = (d.kernel - 1 - tau) * d.dilation;
        double acc = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double* dyrow = dy.data() + (b * d.c_out + c) * d.length;
            const double* xrow = x.data() + (b * d.c_in + ci) * d.length;
            for (std::size_t t = back; t < d.length; ++t) acc += dyrow[t] * xrow[t - back];
        }
        dwrow[tau] += acc;
    }
}

inline void bmm_row(std::span<const double> a, std::span<const double> c, std::span<double> y,
                    BmmDims d, std::size_t bi) {
    const std::size_t b = bi / d.n;
    double* yrow = y.data() + bi * d.f;
    const double* arow = a.data() + bi * d.k;
    for (std::size_t j = 0; j < d.f; ++j) yrow[j] = 0.0;
    for (std::size_t kk = 0; kk < d.k; ++kk) {
        const double av = arow[kk];
        const double* crow = c.data() + (b * d.k + kk) * d.f;
        for (std::size_t j = 0; j < d.f; ++j) yrow[j] += av * crow[j];
    }
}

template <typename Body>
void run_serial(std::size_t count, Body&& body) {
    for (std::size_t i = 0; i < count; ++i) body(i);
}

template <typename Body>
void run_omp(std::size_t count, Body&& body) {
#ifdef GTCN_HAVE_OPENMP
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
#else
    run_serial(count, body);
#endif
}

bool go_parallel(std::size_t work) {
#ifdef GTCN_HAVE_OPENMP
    return work >= g_threshold.load(std::memory_order_relaxed) && omp_get_max_threads() > 1 &&
           !omp_in_parallel();
#else
    (void)work;
    return false;
#endif
}

}  // namespace

#define GTCN_DEFINE_VARIANT(ns, runner)                                                          \
    namespace ns {                                                                               \
    void affine_forward(std::span<const double> x, std::span<const double> w,                    \
                        std::span<const double> bias, std::span<double> y, AffineDims d) {       \
        runner(d.rows, [&](std::size_t r) { affine_forward_row(x, w, bias, y, d, r); });         \
    }                                                                                            \
    void affine_backward_input(std::span<const double> dy, std::span<const double> w,            \
                               std::span<double> dx, AffineDims d) {                             \
        runner(d.rows, [&](std::size_t r) { affine_backward_input_row(dy, w, dx, d, r); });      \
    }                                                                                            \
    void affine_backward_weight(std::span<const double> x, std::span<const double> dy,           \
                                std::span<double> dw, AffineDims d) {                            \
        runner(d.in, [&](std::size_t i) { affine_backward_weight_row(x, dy, dw, d, i); });       \
    }                                                                                            \
    void conv1d_forward(std::span<const double> x, std::span<const double> w,                    \
                        std::span<const double> bias, std::span<double> y, ConvDims d) {         \
        runner(d.batch* d.c_out,                                                                 \
               [&](std::size_t i) { conv1d_forward_row(x, w, bias, y, d, i); });                 \
    }                                                                                            \
    void conv1d_backward_input(std::span<const double> dy, std::span<const double> w,            \
                               std::span<double> dx, ConvDims d) {                               \
        runner(d.batch* d.c_in, [&](std::size_t i) { conv1d_backward_input_row(dy, w, dx, d, i); }); \
    }                                                                                            \
    void conv1d_backward_weight(std::span<const double> x, std::span<const double> dy,           \
                                std::span<double> dw, ConvDims d) {                              \
        runner(d.c_out* d.c_in,                                                                  \
               [&](std::size_t i) { conv1d_backward_weight_row(x, dy, dw, d, i); });             \
    }                                                                                            \
    void bmm_forward(std::span<const double> a, std::span<const double> c, std::span<double> y,  \
                     BmmDims d) {                                                                \
        runner(d.batch* d.n, [&](std::size_t i) { bmm_row(a, c, y, d, i); });                    \
    }                                                                                            \
    }

GTCN_DEFINE_VARIANT(serial, run_serial)
GTCN_DEFINE_VARIANT(omp, run_omp)

#undef GTCN_DEFINE_VARIANT

void affine_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y, AffineDims d) {
    if (go_parallel(d.rows * d.in * d.out))
        omp::affine_forward(x, w, bias, y, d);
    else
        serial::affine_forward(x, w, bias, y, d);
}

void affine_backward_input(std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx, AffineDims d) {
    if (go_parallel(d.rows * d.in * d.out))
        omp::affine_backward_input(dy, w, dx, d);
    else
        serial::affine_backward_input(dy, w, dx, d);
}

void affine_backward_weight(std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, AffineDims d) {
    if (go_parallel(d.rows * d.in * d.out))
        omp::affine_backward_weight(x, dy, dw, d);
    else
        serial::affine_backward_weight(x, dy, dw, d);
}

void conv1d_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y, ConvDims d) {
    if (go_parallel(d.batch * d.c_out * d.c_in * d.length * d.kernel))
        omp::conv1d_forward(x, w, bias, y, d);
    else
        serial::conv1d_forward(x, w, bias, y, d);
}

void conv1d_backward_input(std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx, ConvDims d) {
    if (go_parallel(d.batch * d.c_out * d.c_in * d.length * d.kernel))
        omp::conv1d_backward_input(dy, w, dx, d);
    else
        serial::conv1d_backward_input(dy, w, dx, d);
}

void conv1d_backward_weight(std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, ConvDims d) {
    if (go_parallel(d.batch * d.c_out * d.c_in * d.length * d.kernel))
        omp::conv1d_backward_weight(x, dy, dw, d);
    else
        serial::conv1d_backward_weight(x, dy, dw, d);
}

void bmm_forward(std::span<const double> a, std::span<const double> c, std::span<double> y,
                 BmmDims d) {
    if (go_parallel(d.batch * d.n * d.k * d.f))
        omp::bmm_forward(a, c, y, d);
    else
        serial::bmm_forward(a, c, y, d);
}

bool openmp_enabled() {
#ifdef GTCN_HAVE_OPENMP
    return true;
#else
    return false;
#endif
}

std::size_t parallel_threshold() { return g_threshold.load(); }
void set_parallel_threshold(std::size_t flops) { g_threshold.store(flops); }

void set_num_threads(int threads) {
#ifdef GTCN_HAVE_OPENMP
    omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

int max_threads() {
#ifdef GTCN_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace gtcn::kernels
