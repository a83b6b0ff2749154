#pragma once

#include "rdcache/analytic.hpp"
#include "rdcache/estimate.hpp"
#include "rdcache/fenwick.hpp"
#include "rdcache/histogram.hpp"
#include "rdcache/optimize.hpp"
#include "rdcache/replacement.hpp"
#include "rdcache/simulate.hpp"
#include "rdcache/trace.hpp"

namespace rdcache {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rdcache
