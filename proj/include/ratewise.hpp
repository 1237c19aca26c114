#pragma once

#include "ratewise/config.hpp"
#include "ratewise/constraints.hpp"
#include "ratewise/core_data.hpp"
#include "ratewise/error.hpp"
#include "ratewise/json_io.hpp"
#include "ratewise/kendall.hpp"
#include "ratewise/projection.hpp"
#include "ratewise/scoring.hpp"
#include "ratewise/script.hpp"
#include "ratewise/session.hpp"
#include "ratewise/svm.hpp"
