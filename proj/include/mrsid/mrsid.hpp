#ifndef MRSID_MRSID_HPP
#define MRSID_MRSID_HPP

#include "mrsid/em.hpp"
#include "mrsid/errors.hpp"
#include "mrsid/forecast.hpp"
#include "mrsid/kalman.hpp"
#include "mrsid/metrics.hpp"
#include "mrsid/model.hpp"
#include "mrsid/proximal.hpp"
#include "mrsid/random.hpp"
#include "mrsid/selection.hpp"
#include "mrsid/simulator.hpp"
#include "mrsid/types.hpp"

#endif  // MRSID_MRSID_HPP
