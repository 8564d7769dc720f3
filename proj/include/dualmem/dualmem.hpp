#pragma once

#include "dualmem/agent.hpp"
#include "dualmem/bench.hpp"
#include "dualmem/compare.hpp"
#include "dualmem/config.hpp"
#include "dualmem/dual_memory.hpp"
#include "dualmem/envs.hpp"
#include "dualmem/experiment.hpp"
#include "dualmem/main_memory.hpp"
#include "dualmem/priority.hpp"
#include "dualmem/q_network.hpp"
#include "dualmem/sum_tree.hpp"
#include "dualmem/transition.hpp"
