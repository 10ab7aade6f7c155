#pragma once

#include "uoptime/dataset.hpp"
#include "uoptime/error.hpp"
#include "uoptime/evaluation.hpp"
#include "uoptime/optimizer.hpp"
#include "uoptime/regression.hpp"
#include "uoptime/report.hpp"
#include "uoptime/stability.hpp"
