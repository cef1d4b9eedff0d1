#ifndef CLUSTOPT_CLUSTOPT_HPP
#define CLUSTOPT_CLUSTOPT_HPP

#include "clustopt/algorithms.hpp"
#include "clustopt/clustering.hpp"
#include "clustopt/common.hpp"
#include "clustopt/metrics.hpp"
#include "clustopt/pipeline.hpp"
#include "clustopt/problems.hpp"
#include "clustopt/representation.hpp"
#include "clustopt/rng.hpp"
#include "clustopt/trajectory.hpp"
#include "clustopt/viz.hpp"

#endif
