#pragma once

#include "noma_fusion/asymptotics.hpp"
#include "noma_fusion/decoder.hpp"
#include "noma_fusion/model.hpp"
#include "noma_fusion/planar_bound.hpp"
#include "noma_fusion/rng.hpp"
#include "noma_fusion/simulator.hpp"
