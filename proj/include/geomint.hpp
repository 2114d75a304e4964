/// Umbrella header for the geomint library.
#pragma once

#include "geomint/rational.hpp"
#include "geomint/linalg.hpp"
#include "geomint/polynomial.hpp"
#include "geomint/chain.hpp"
#include "geomint/chain_ops.hpp"
#include "geomint/comass.hpp"
#include "geomint/quadrature.hpp"
#include "geomint/forms.hpp"
#include "geomint/cochains.hpp"
#include "geomint/analysis.hpp"
#include "geomint/lp.hpp"
#include "geomint/flatnorm.hpp"
#include "geomint/clip.hpp"
#include "geomint/modulus.hpp"
#include "geomint/deformation.hpp"
#include "geomint/io.hpp"
#include "geomint/experiment.hpp"
