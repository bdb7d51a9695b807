#pragma once

#include "aggregate.hpp"
#include "candidate_store.hpp"
#include "csv.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "forest.hpp"
#include "hungarian.hpp"
#include "json_io.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "reconstruct.hpp"
#include "rng.hpp"
#include "similarity.hpp"
#include "synth.hpp"
#include "tabular.hpp"
