#pragma once

#include "cover.hpp"
#include "cover_build.hpp"
#include "diagnostics.hpp"
#include "expectation.hpp"
#include "merge.hpp"
#include "pmmh.hpp"
#include "proportion.hpp"
#include "region.hpp"
#include "rng.hpp"
#include "run.hpp"
#include "serialize.hpp"
#include "subset_sampler.hpp"
#include "target.hpp"
