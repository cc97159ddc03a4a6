#pragma once

#include "assembly.hpp"
#include "dataset.hpp"
#include "eigensolver.hpp"
#include "error.hpp"
#include "localfit.hpp"
#include "metrics.hpp"
#include "neighbors.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "point_cloud.hpp"
#include "random.hpp"
