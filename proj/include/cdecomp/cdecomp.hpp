#ifndef CDECOMP_CDECOMP_HPP
#define CDECOMP_CDECOMP_HPP

#include "cdecomp/bootstrap.hpp"
#include "cdecomp/config.hpp"
#include "cdecomp/confounder.hpp"
#include "cdecomp/csv.hpp"
#include "cdecomp/design.hpp"
#include "cdecomp/error.hpp"
#include "cdecomp/estimators.hpp"
#include "cdecomp/glm.hpp"
#include "cdecomp/json_io.hpp"
#include "cdecomp/oracle.hpp"
#include "cdecomp/report.hpp"
#include "cdecomp/rng.hpp"
#include "cdecomp/sensitivity.hpp"
#include "cdecomp/stats.hpp"
#include "cdecomp/structural.hpp"
#include "cdecomp/table.hpp"
#include "cdecomp/weights.hpp"

#endif
