#pragma once

#include "ibhm/errors.hpp"
#include "ibhm/model.hpp"
#include "ibhm/fem.hpp"
#include "ibhm/analytic.hpp"
#include "ibhm/fft.hpp"
#include "ibhm/tfr.hpp"
#include "ibhm/feature.hpp"
#include "ibhm/dataset.hpp"
#include "ibhm/diagnose.hpp"
#include "ibhm/pipeline.hpp"
#include "ibhm/plot.hpp"
