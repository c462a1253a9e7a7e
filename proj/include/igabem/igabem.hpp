#pragma once

// Everything: geometry, kernels, boundary system, inclusions, iterative
// solver, model files, bundled fixtures and result export.

#include "igabem/boundary.hpp"
#include "igabem/errors.hpp"
#include "igabem/export.hpp"
#include "igabem/field_grid.hpp"
#include "igabem/fixtures.hpp"
#include "igabem/inclusion.hpp"
#include "igabem/kernels.hpp"
#include "igabem/material.hpp"
#include "igabem/model.hpp"
#include "igabem/nurbs.hpp"
#include "igabem/quadrature.hpp"
#include "igabem/solver.hpp"
#include "igabem/volume_integration.hpp"
