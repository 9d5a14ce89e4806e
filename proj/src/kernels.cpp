#include "evpan/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace evpan::kernels {

extern const Ops kScalarOps;
#if defined(__x86_64__)
extern const Ops kAvx2Ops;
#endif

bool avx2_supported() {
#if defined(__x86_64__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* ops(Backend b) {
  if (b == Backend::scalar) return &kScalarOps;
#if defined(__x86_64__)
  if (avx2_supported()) return &kAvx2Ops;
#endif
  return nullptr;
}

namespace {

const Ops* pick_active() {
  if (const char* env = std::getenv("EVPAN_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &kScalarOps;
    if (std::strcmp(env, "avx2") == 0) {
      if (const Ops* o = ops(Backend::avx2)) return o;
    }
  }
  if (const Ops* o = ops(Backend::avx2)) return o;
  return &kScalarOps;
}

const Ops* g_active = nullptr;

}  // namespace

const Ops& ops() {
  if (!g_active) g_active = pick_active();
  return *g_active;
}

void force_backend(Backend b) {
  if (const Ops* o = ops(b)) g_active = o;
}

}  // namespace evpan::kernels
