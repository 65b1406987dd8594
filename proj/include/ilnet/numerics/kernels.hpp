#pragma once

#include <cstddef>
#include <string_view>

namespace ilnet::kernels {

// Dense inner loops used by the differentiable ops. Every variant accumulates
// into its output (C += ...). Matrices are row-major and contiguous.
struct KernelTable {
  std::string_view name;
  /// C[m,n] += sum_k A[m,k] * B[k,n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  /// C[m,k] += sum_n A[m,n] * B[k,n]
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  /// C[k,n] += sum_m A[m,k] * B[m,n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

enum class Backend { kScalar, kAvx2 };

const KernelTable& scalar_table();
/// nullptr when the build has no AVX2 variant.
const KernelTable* avx2_table();

bool cpu_supports_avx2();

/// The active table. Chosen on first use: AVX2+FMA when both the build and the
/// CPU support it, unless the environment sets ILNET_KERNELS=scalar.
const KernelTable& active();
Backend active_backend();
/// Forces a backend; throws ArgumentError if it is unavailable on this machine.
void set_backend(Backend backend);

}  // namespace ilnet::kernels
