#ifndef GPTS_GPTS_HPP
#define GPTS_GPTS_HPP

#include "gpts/bounds.hpp"
#include "gpts/errors.hpp"
#include "gpts/experiment.hpp"
#include "gpts/gp.hpp"
#include "gpts/kernels.hpp"
#include "gpts/planning.hpp"
#include "gpts/search.hpp"
#include "gpts/spectrum.hpp"

#endif  // GPTS_GPTS_HPP
