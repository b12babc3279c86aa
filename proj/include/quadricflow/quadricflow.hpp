#pragma once

#include "core_net.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "gradflow.hpp"
#include "io.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "symmetry.hpp"
#include "topology.hpp"
#include "verify.hpp"
