#pragma once

// Everything except the JSON helpers, which need the bundled json.hpp.

#include "cks/analytic.hpp"
#include "cks/chaos.hpp"
#include "cks/equivalence.hpp"
#include "cks/errors.hpp"
#include "cks/growth.hpp"
#include "cks/kernel.hpp"
#include "cks/measures.hpp"
#include "cks/numeric.hpp"
#include "cks/optimize.hpp"
#include "cks/quadrature.hpp"
#include "cks/random.hpp"
#include "cks/space.hpp"
#include "cks/transforms.hpp"
