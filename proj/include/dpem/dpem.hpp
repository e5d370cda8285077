#pragma once

#include "dpem/error.hpp"
#include "dpem/mixture.hpp"
#include "dpem/scoring.hpp"
#include "dpem/partition.hpp"
#include "dpem/reference_init.hpp"
#include "dpem/em.hpp"
#include "dpem/simulate.hpp"
#include "dpem/metrics.hpp"
#include "dpem/fit.hpp"
#include "dpem/io.hpp"
#include "dpem/benchmark.hpp"
#include "dpem/commands.hpp"
