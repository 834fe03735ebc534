#pragma once

#include "icl/error.hpp"
#include "icl/numerics.hpp"
#include "icl/random.hpp"
#include "icl/tasks.hpp"
#include "icl/simplex.hpp"
#include "icl/estimators.hpp"
#include "icl/transformer.hpp"
#include "icl/checkpoint.hpp"
#include "icl/parallel.hpp"
#include "icl/trainer.hpp"
#include "icl/eval.hpp"
#include "icl/config.hpp"
#include "icl/io.hpp"
#include "icl/plot.hpp"
#include "icl/commands.hpp"
