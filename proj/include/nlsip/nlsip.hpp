#ifndef NLSIP_NLSIP_HPP
#define NLSIP_NLSIP_HPP

#include "blowup.hpp"
#include "cartesian.hpp"
#include "error.hpp"
#include "evolution.hpp"
#include "experiment.hpp"
#include "field_io.hpp"
#include "functionals.hpp"
#include "ground_state.hpp"
#include "hardy_probe.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "profile_decomposition.hpp"
#include "radial_field.hpp"
#include "radial_grid.hpp"
#include "radial_operator.hpp"
#include "translated_bump.hpp"
#include "tridiagonal.hpp"

#endif
