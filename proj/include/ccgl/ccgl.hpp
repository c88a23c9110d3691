#pragma once

#include "ccgl/augment.hpp"
#include "ccgl/autodiff.hpp"
#include "ccgl/cluster.hpp"
#include "ccgl/config.hpp"
#include "ccgl/contrast.hpp"
#include "ccgl/curriculum.hpp"
#include "ccgl/encoder.hpp"
#include "ccgl/graph.hpp"
#include "ccgl/metrics.hpp"
#include "ccgl/report.hpp"
#include "ccgl/trainer.hpp"
