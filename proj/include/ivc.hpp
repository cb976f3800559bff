#pragma once

#include "ivc/error.hpp"
#include "ivc/rng.hpp"
#include "ivc/sources.hpp"
#include "ivc/invariance.hpp"
#include "ivc/ri_theory.hpp"
#include "ivc/coding/model.hpp"
#include "ivc/coding/rans.hpp"
#include "ivc/coding/codestream.hpp"
#include "ivc/coding/invariant_codec.hpp"
#include "ivc/autodiff.hpp"
#include "ivc/neural/mlp.hpp"
#include "ivc/neural/adam.hpp"
#include "ivc/neural/bottleneck.hpp"
#include "ivc/neural/losses.hpp"
#include "ivc/neural/model.hpp"
#include "ivc/neural/evaluate.hpp"
#include "ivc/neural/train.hpp"
#include "ivc/neural/partition.hpp"
#include "ivc/neural/feature_compressor.hpp"
#include "ivc/neural/staggered.hpp"
#include "ivc/neural/gradient_suite.hpp"
#include "ivc/neural/sweep.hpp"
#include "ivc/config.hpp"
#include "ivc/report.hpp"
#include "ivc/platform.hpp"
#include "ivc/cli.hpp"
