#pragma once

#include "core.hpp"
#include "random.hpp"
#include "batch.hpp"
#include "online.hpp"
#include "ensemble.hpp"
#include "metrics.hpp"
#include "io.hpp"
