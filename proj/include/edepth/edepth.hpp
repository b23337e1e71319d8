#pragma once

#include "edepth/ansatz.hpp"
#include "edepth/bound.hpp"
#include "edepth/errors.hpp"
#include "edepth/experiment.hpp"
#include "edepth/io.hpp"
#include "edepth/optimize.hpp"
#include "edepth/oracle.hpp"
#include "edepth/parallel.hpp"
#include "edepth/rng.hpp"
#include "edepth/stationary.hpp"
