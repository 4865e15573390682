#pragma once

#include "docp/baselines.hpp"
#include "docp/diag_ocp.hpp"
#include "docp/error.hpp"
#include "docp/hessian_probe.hpp"
#include "docp/param_vector.hpp"
#include "docp/problems.hpp"
#include "docp/seed.hpp"
