#pragma once

#include "csn/model.hpp"
#include "csn/config_io.hpp"
#include "csn/topology.hpp"
#include "csn/traffic.hpp"
#include "csn/dejitter.hpp"
#include "csn/engine.hpp"
#include "csn/metrics.hpp"
#include "csn/trace_io.hpp"
#include "csn/experiments.hpp"
