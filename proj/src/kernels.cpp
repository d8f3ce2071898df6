#include "tsc/kernels.h"

#include <cstdlib>
#include <cstring>

namespace tsc {
namespace kernels {

#ifndef TSC_HAVE_AVX2_BUILD
const Ops &avx2Ops() { return scalarOps(); }
#endif

bool avx2Supported() {
#ifdef TSC_HAVE_AVX2_BUILD
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {
const Ops *select() {
    const char *env = std::getenv("TSC_KERNELS");
    if (env) {
        if (std::strcmp(env, "scalar") == 0)
            return &scalarOps();
        if (std::strcmp(env, "avx2") == 0 && avx2Supported())
            return &avx2Ops();
    }
    return avx2Supported() ? &avx2Ops() : &scalarOps();
}
} // namespace

const Ops &ops() {
    static const Ops *active = select();
    return *active;
}

std::string activeBackendName() { return ops().name; }

} // namespace kernels
} // namespace tsc
