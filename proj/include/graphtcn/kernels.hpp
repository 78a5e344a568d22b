#pragma once

// Inner loops behind the heavy tensor operations.
//
// Every kernel exists twice: a plain serial reference and an OpenMP variant
// that parallelizes over output rows only. Each output element is produced by
// one thread with the serial summation order, so both variants agree
// bit-for-bit. The dispatching entry points pick the OpenMP variant when the
// work is large enough and OpenMP was compiled in.

#include <cstddef>
#include <span>

namespace gtcn::kernels {

struct AffineDims {
    std::size_t rows;
    std::size_t in;
    std::size_t out;
};

struct ConvDims {
    std::size_t batch;
    std::size_t c_in;
    std::size_t c_out;
    std::size_t length;
    std::size_t kernel;
    std::size_t dilation;
};

struct BmmDims {
    std::size_t batch;
    std::size_t n;
    std::size_t k;
    std::size_t f;
};

// y[r, j] = bias[j] + sum_i x[r, i] * w[i, j]   (bias may be empty)
// dx[r, i] += sum_j dy[r, j] * w[i, j]
// dw[i, j] += sum_r x[r, i] * dy[r, j]

// y[b, c, t] = bias[c] + sum_{c', tau} w[c, c', tau] * x[b, c', t - (k-1-tau)*d]
// dx, dw accumulate the matching adjoints.

// y[b, i, j] = sum_k a[b, i, k] * c[b, k, j]

#define GTCN_KERNEL_SET                                                                          \
    void affine_forward(std::span<const double> x, std::span<const double> w,                    \
                        std::span<const double> bias, std::span<double> y, AffineDims d);        \
    void affine_backward_input(std::span<const double> dy, std::span<const double> w,            \
                               std::span<double> dx, AffineDims d);                              \
    void affine_backward_weight(std::span<const double> x, std::span<const double> dy,           \
                                std::span<double> dw, AffineDims d);                             \
    void conv1d_forward(std::span<const double> x, std::span<const double> w,                    \
                        std::span<const double> bias, std::span<double> y, ConvDims d);          \
    void conv1d_backward_input(std::span<const double> dy, std::span<const double> w,            \
                               std::span<double> dx, ConvDims d);                                \
    void conv1d_backward_weight(std::span<const double> x, std::span<const double> dy,           \
                                std::span<double> dw, ConvDims d);                               \
    void bmm_forward(std::span<const double> a, std::span<const double> c, std::span<double> y,  \
                     BmmDims d);

namespace serial {
GTCN_KERNEL_SET
}

namespace omp {
GTCN_KERNEL_SET
}

GTCN_KERNEL_SET

#undef GTCN_KERNEL_SET

/// True when the OpenMP variants were compiled with OpenMP enabled.
bool openmp_enabled();

/// Work (multiply-adds) below which dispatch stays serial.
std::size_t parallel_threshold();
void set_parallel_threshold(std::size_t flops);

/// Number of threads the OpenMP variants may use (no-op without OpenMP).
void set_num_threads(int threads);
int max_threads();

}  // namespace gtcn::kernels
