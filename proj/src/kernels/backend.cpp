#include "forge/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace forge::kernels {

namespace {

Backend initial_backend() {
    if (const char* env = std::getenv("FORGE_BACKEND")) {
        if (std::strcmp(env, "serial") == 0) return Backend::serial;
    }
    return Backend::openmp;
}

Backend g_backend = initial_backend();

}  // namespace

Backend default_backend() { return g_backend; }
void set_default_backend(Backend b) { g_backend = b; }

}  // namespace forge::kernels
