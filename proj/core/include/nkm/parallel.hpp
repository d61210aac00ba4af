#pragma once

#include <cstddef>
#include <functional>

namespace nkm {

/// Worker count for internal parallelism: min(hardware, NK_THREADS).
/// NK_THREADS unset or invalid means "use all hardware threads";
/// NK_THREADS=1 forces serial execution.
std::size_t worker_count();

/// Runs fn(begin, end) over disjoint index chunks of [0, n), possibly on
/// several threads. Chunks are fixed by n and the worker count alone, and
/// workers write to disjoint outputs, so results are bitwise independent of
/// the degree of parallelism.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace nkm
