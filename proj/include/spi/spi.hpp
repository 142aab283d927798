#pragma once

#include "spi/analysis.hpp"
#include "spi/calibration.hpp"
#include "spi/combinatorics.hpp"
#include "spi/distributions.hpp"
#include "spi/errors.hpp"
#include "spi/io.hpp"
#include "spi/rng.hpp"
#include "spi/score_vector.hpp"
#include "spi/scores.hpp"
#include "spi/simulation.hpp"
#include "spi/subset_selection.hpp"
#include "spi/transporter.hpp"
