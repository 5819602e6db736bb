#pragma once

#include "mmlpt/address.hpp"
#include "mmlpt/alias.hpp"
#include "mmlpt/collapse.hpp"
#include "mmlpt/diamond.hpp"
#include "mmlpt/graph.hpp"
#include "mmlpt/graph_io.hpp"
#include "mmlpt/mda.hpp"
#include "mmlpt/mda_lite.hpp"
#include "mmlpt/multilevel.hpp"
#include "mmlpt/prober.hpp"
#include "mmlpt/simulator.hpp"
#include "mmlpt/stopping.hpp"
#include "mmlpt/survey.hpp"
#include "mmlpt/topology.hpp"
#include "mmlpt/trace_state.hpp"
#include "mmlpt/validation.hpp"
