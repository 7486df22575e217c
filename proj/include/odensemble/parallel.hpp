#ifndef ODENSEMBLE_PARALLEL_HPP
#define ODENSEMBLE_PARALLEL_HPP

#include <utility>
#include <vector>

#include "odensemble/types.hpp"

namespace odensemble {

/// Splits [0, total) into consecutive [begin, end) tiles of tile_size
/// systems (the last one may be shorter). Tiles keep each worker streaming
/// through adjacent SoA slots.
std::vector<std::pair<Index, Index>> partition(Index total, Index tile_size);

/// Effective parallelism degree: the ODENSEMBLE_WORKERS environment variable
/// (integer >= 1) wins when set, otherwise `requested`; 0 requests hardware
/// concurrency.
Index resolve_worker_count(Index requested);

} // namespace odensemble

#endif
