#pragma once

#include "errors.hpp"
#include "format.hpp"
#include "hilbert.hpp"
#include "dynamics.hpp"
#include "sampling.hpp"
#include "alg1.hpp"
#include "alg2.hpp"
#include "bounds.hpp"
#include "scenario.hpp"
#include "pipeline.hpp"
#include "output.hpp"
