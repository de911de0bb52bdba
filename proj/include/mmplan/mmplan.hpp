#pragma once

#include "mmplan/calibrate.hpp"
#include "mmplan/composer.hpp"
#include "mmplan/dse.hpp"
#include "mmplan/errors.hpp"
#include "mmplan/io.hpp"
#include "mmplan/perfmodel.hpp"
#include "mmplan/platform.hpp"
#include "mmplan/scheduler.hpp"
#include "mmplan/workload.hpp"
