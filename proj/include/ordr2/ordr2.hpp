#pragma once

// Cumulative-link models and the penalized likelihood-ratio index.

#include "ordr2/dataset.hpp"
#include "ordr2/errors.hpp"
#include "ordr2/estimation.hpp"
#include "ordr2/gof.hpp"
#include "ordr2/io.hpp"
#include "ordr2/links.hpp"
#include "ordr2/simulation.hpp"
