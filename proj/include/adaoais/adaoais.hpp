#pragma once

#include "adaoais/commands.hpp"
#include "adaoais/common.hpp"
#include "adaoais/config.hpp"
#include "adaoais/io.hpp"
#include "adaoais/montecarlo.hpp"
#include "adaoais/oais.hpp"
#include "adaoais/optimizers.hpp"
#include "adaoais/oracle.hpp"
#include "adaoais/plot.hpp"
#include "adaoais/proposals.hpp"
#include "adaoais/rng.hpp"
#include "adaoais/special.hpp"
#include "adaoais/targets.hpp"
