#pragma once

#include "recourse/error.hpp"
#include "recourse/rational.hpp"
#include "recourse/scm.hpp"
#include "recourse/json_io.hpp"
#include "recourse/games.hpp"
#include "recourse/recourse.hpp"
#include "recourse/query_io.hpp"
#include "recourse/experiment.hpp"
