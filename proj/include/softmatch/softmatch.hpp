#pragma once

#include "softmatch/bank_builder.hpp"
#include "softmatch/bank_update.hpp"
#include "softmatch/config.hpp"
#include "softmatch/core.hpp"
#include "softmatch/errors.hpp"
#include "softmatch/feature_file.hpp"
#include "softmatch/handcrafted.hpp"
#include "softmatch/image_io.hpp"
#include "softmatch/instance_fusion.hpp"
#include "softmatch/metrics.hpp"
#include "softmatch/pipeline.hpp"
#include "softmatch/segmentation_head.hpp"
#include "softmatch/similarity.hpp"
#include "softmatch/synthetic.hpp"
#include "softmatch/temporal_filter.hpp"
