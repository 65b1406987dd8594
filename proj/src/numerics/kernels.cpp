#include "ilnet/numerics/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "ilnet/errors.hpp"

namespace ilnet::kernels {

#ifndef ILNET_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_supports_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* select_default() {
  const char* env = std::getenv("ILNET_KERNELS");
  if (env != nullptr && std::string(env) == "scalar") return &scalar_table();
  if (avx2_table() != nullptr && cpu_supports_avx2()) return avx2_table();
  return &scalar_table();
}

}  // namespace

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = select_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

Backend active_backend() { return &active() == &scalar_table() ? Backend::kScalar : Backend::kAvx2; }

void set_backend(Backend backend) {
  if (backend == Backend::kScalar) {
    g_active.store(&scalar_table(), std::memory_order_release);
    return;
  }
  if (avx2_table() == nullptr || !cpu_supports_avx2()) {
    throw ArgumentError("AVX2 kernels are not available on this build or CPU");
  }
  g_active.store(avx2_table(), std::memory_order_release);
}

}  // namespace ilnet::kernels
