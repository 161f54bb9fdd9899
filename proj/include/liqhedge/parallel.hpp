#ifndef LIQHEDGE_PARALLEL_HPP
#define LIQHEDGE_PARALLEL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace liqhedge {

using RandomEngine = std::mt19937_64;

/// Independent generator for sub-stream `stream` of a master seed.
RandomEngine make_stream(std::uint64_t seed, std::uint64_t stream);

/// Runs task(k) for k in [0, count) on up to `workers` threads. Tasks must
/// write only to their own output slot; the first exception is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task);

/// Worker count used when a caller passes 0.
int default_workers();

}  // namespace liqhedge

#endif
