#pragma once

#include "kwsolve/error.hpp"
#include "kwsolve/expr.hpp"
#include "kwsolve/field_io.hpp"
#include "kwsolve/geometry.hpp"
#include "kwsolve/grid.hpp"
#include "kwsolve/krylov.hpp"
#include "kwsolve/linsolve.hpp"
#include "kwsolve/operators.hpp"
#include "kwsolve/random_fields.hpp"
#include "kwsolve/spectral.hpp"
#include "kwsolve/kw/barriers.hpp"
#include "kwsolve/kw/certificates.hpp"
#include "kwsolve/kw/critical.hpp"
#include "kwsolve/kw/monotone.hpp"
#include "kwsolve/kw/newton.hpp"
#include "kwsolve/kw/perturbative.hpp"
#include "kwsolve/kw/pipeline.hpp"
#include "kwsolve/kw/problem.hpp"
