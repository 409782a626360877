#ifndef LGFUSION_LGFUSION_HPP
#define LGFUSION_LGFUSION_HPP

#include "lgfusion/bch_baseline.hpp"
#include "lgfusion/distributions.hpp"
#include "lgfusion/errors.hpp"
#include "lgfusion/experiment.hpp"
#include "lgfusion/fusion.hpp"
#include "lgfusion/lie_core.hpp"
#include "lgfusion/metrics.hpp"
#include "lgfusion/so3.hpp"

#endif  // LGFUSION_LGFUSION_HPP
