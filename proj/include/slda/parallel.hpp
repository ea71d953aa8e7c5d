#pragma once

#include <functional>

namespace slda {

// Runs fn(0..count-1) on a small worker pool. threads <= 0 selects the
// hardware concurrency. Work items must write only to their own slots;
// the call returns after every item finished. Exceptions from items are
// rethrown (first one wins).
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

} // namespace slda
