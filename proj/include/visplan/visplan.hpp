#pragma once

#include "visplan/clustering.hpp"
#include "visplan/cost_terms.hpp"
#include "visplan/distance.hpp"
#include "visplan/geometry.hpp"
#include "visplan/io.hpp"
#include "visplan/optimizer.hpp"
#include "visplan/pipeline.hpp"
#include "visplan/scenario.hpp"
#include "visplan/sensing.hpp"
#include "visplan/sensitivity.hpp"
#include "visplan/state.hpp"
