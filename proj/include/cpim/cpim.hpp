// cpim.hpp - AFDM chirp-permutation index modulation, all modules
#pragma once

#include "cpim/afdm.hpp"
#include "cpim/channel.hpp"
#include "cpim/codebook.hpp"
#include "cpim/codebook_design.hpp"
#include "cpim/codec.hpp"
#include "cpim/config.hpp"
#include "cpim/constellation.hpp"
#include "cpim/detectors.hpp"
#include "cpim/error.hpp"
#include "cpim/gas.hpp"
#include "cpim/io.hpp"
#include "cpim/ml_objective.hpp"
#include "cpim/objective.hpp"
#include "cpim/permutation.hpp"
#include "cpim/rng.hpp"
#include "cpim/sim.hpp"
#include "cpim/types.hpp"
