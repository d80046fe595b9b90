#include "gwm/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace gwm::kern {

#if !GWM_AVX2_TU
const Kernels* avx2_kernels() { return nullptr; }
#endif

namespace {

const Kernels* pick_default() {
    const char* force = std::getenv("GWM_FORCE_SCALAR");
    if (force && std::strcmp(force, "0") != 0) return &scalar_kernels();
    if (const Kernels* v = avx2_kernels()) return v;
    return &scalar_kernels();
}

const Kernels* g_active = nullptr;

} // namespace

const Kernels& active_kernels() {
    if (!g_active) g_active = pick_default();
    return *g_active;
}

void select_kernels(const Kernels& k) { g_active = &k; }

} // namespace gwm::kern
