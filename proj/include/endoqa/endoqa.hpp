#pragma once

#include "endoqa/degradation.hpp"
#include "endoqa/detection_eval.hpp"
#include "endoqa/error.hpp"
#include "endoqa/filters.hpp"
#include "endoqa/geometry.hpp"
#include "endoqa/metrics.hpp"
#include "endoqa/pipeline.hpp"
#include "endoqa/quality.hpp"
#include "endoqa/raster.hpp"
#include "endoqa/restoration/color.hpp"
#include "endoqa/restoration/hf_pyramid.hpp"
#include "endoqa/restoration/patch_inpaint.hpp"
#include "endoqa/restoration/tv.hpp"
#include "endoqa/simulate.hpp"
