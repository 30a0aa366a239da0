#pragma once

// Umbrella header for the regularized Beckmann transport solver.

#include "assembly.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "flow.hpp"
#include "mesh.hpp"
#include "model.hpp"
#include "output.hpp"
#include "solver.hpp"
#include "studies.hpp"
