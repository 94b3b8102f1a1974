#include "superct/kernels.hpp"

#include <atomic>
#include <cstring>

namespace superct::kern {

#if !defined(__x86_64__) && !defined(_M_X64) && !defined(__aarch64__)
const Backend* simd_backend() { return nullptr; }
#endif

namespace {

std::atomic<const Backend*> g_active{nullptr};

const Backend* pick_auto() {
    const Backend* s = simd_backend();
    return s ? s : &scalar_backend();
}

}  // namespace

const Backend& active() {
    const Backend* b = g_active.load(std::memory_order_acquire);
    if (!b) {
        b = pick_auto();
        g_active.store(b, std::memory_order_release);
    }
    return *b;
}

bool force_backend(const char* name) {
    if (std::strcmp(name, "auto") == 0) {
        g_active.store(pick_auto(), std::memory_order_release);
        return true;
    }
    if (std::strcmp(name, "scalar") == 0) {
        g_active.store(&scalar_backend(), std::memory_order_release);
        return true;
    }
    if (std::strcmp(name, "simd") == 0) {
        const Backend* s = simd_backend();
        if (!s) return false;
        g_active.store(s, std::memory_order_release);
        return true;
    }
    const Backend* s = simd_backend();
    if (s && std::strcmp(name, s->name) == 0) {
        g_active.store(s, std::memory_order_release);
        return true;
    }
    return false;
}

}  // namespace superct::kern
