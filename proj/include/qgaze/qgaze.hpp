// qgaze.hpp — umbrella include.

#pragma once

#include "qgaze/amsgrad.hpp"
#include "qgaze/autodiff.hpp"
#include "qgaze/csv.hpp"
#include "qgaze/data.hpp"
#include "qgaze/discriminator.hpp"
#include "qgaze/errors.hpp"
#include "qgaze/generator.hpp"
#include "qgaze/markov.hpp"
#include "qgaze/metrics.hpp"
#include "qgaze/rng.hpp"
#include "qgaze/statevector.hpp"
#include "qgaze/trainer.hpp"
