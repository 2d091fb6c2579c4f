#include "seelab/parallel.hpp"

#include <cstdlib>

namespace seelab {

std::size_t default_workers() {
    if (const char* env = std::getenv("SEE_LAB_WORKERS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return v;
    }
    return 1;
}

}  // namespace seelab
