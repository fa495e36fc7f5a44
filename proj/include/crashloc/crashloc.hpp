#pragma once

// Umbrella header for the crash-stack fault localization library.

#include "crashloc/callgraph.hpp"
#include "crashloc/entity.hpp"
#include "crashloc/error.hpp"
#include "crashloc/evaluation.hpp"
#include "crashloc/expansion.hpp"
#include "crashloc/pipeline.hpp"
#include "crashloc/ranking.hpp"
#include "crashloc/spectra.hpp"
#include "crashloc/stack.hpp"
#include "crashloc/synthgen.hpp"
#include "crashloc/trace.hpp"
#include "crashloc/trace_io.hpp"
