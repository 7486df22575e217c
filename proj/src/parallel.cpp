#include "odensemble/parallel.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace odensemble {

std::vector<std::pair<Index, Index>> partition(Index total, Index tile_size) {
    if (tile_size < 1) throw std::invalid_argument("partition: tile_size must be >= 1");
    if (total < 0) throw std::invalid_argument("partition: negative total");
    std::vector<std::pair<Index, Index>> tiles;
    tiles.reserve(static_cast<std::size_t>((total + tile_size - 1) / tile_size));
    for (Index begin = 0; begin < total; begin += tile_size)
        tiles.emplace_back(begin, std::min(begin + tile_size, total));
    return tiles;
}

Index resolve_worker_count(Index requested) {
    if (const char* env = std::getenv("ODENSEMBLE_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<Index>(v);
        throw std::invalid_argument("ODENSEMBLE_WORKERS must be an integer >= 1, got '" +
                                    std::string(env) + "'");
    }
    if (requested >= 1) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<Index>(hw) : 1;
}

} // namespace odensemble
