#pragma once

#include "docp/harness/benchmarks.hpp"
#include "docp/harness/config.hpp"
#include "docp/harness/emit.hpp"
#include "docp/harness/run.hpp"
#include "docp/harness/sweep.hpp"
#include "docp/harness/verify.hpp"
