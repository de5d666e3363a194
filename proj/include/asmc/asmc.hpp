#pragma once

#include "asmc/adaptation.hpp"
#include "asmc/errors.hpp"
#include "asmc/evaluation.hpp"
#include "asmc/io.hpp"
#include "asmc/kernels.hpp"
#include "asmc/math.hpp"
#include "asmc/oracles.hpp"
#include "asmc/particles.hpp"
#include "asmc/random.hpp"
#include "asmc/samplers.hpp"
#include "asmc/targets.hpp"
