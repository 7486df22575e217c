#ifndef ODENSEMBLE_TYPES_HPP
#define ODENSEMBLE_TYPES_HPP

#include <cstdint>

namespace odensemble {

using Real = double;
// 64-bit indices so pools with millions of systems stay addressable.
using Index = std::int64_t;

enum class Algorithm {
    RK4,    // classical 4th order, fixed step
    RKCK45  // Cash-Karp 5(4) embedded pair, adaptive step
};

} // namespace odensemble

#endif
