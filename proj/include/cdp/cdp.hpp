#pragma once

#include "cdp/bicluster.hpp"
#include "cdp/config.hpp"
#include "cdp/conjoined.hpp"
#include "cdp/countmat.hpp"
#include "cdp/dpmm.hpp"
#include "cdp/eval.hpp"
#include "cdp/grid.hpp"
#include "cdp/log.hpp"
#include "cdp/parallel.hpp"
#include "cdp/pipeline.hpp"
#include "cdp/random.hpp"
#include "cdp/synth.hpp"
