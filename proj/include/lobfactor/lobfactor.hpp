#pragma once

#include "lobfactor/error.hpp"
#include "lobfactor/time.hpp"
#include "lobfactor/lob_core.hpp"
#include "lobfactor/book_csv.hpp"
#include "lobfactor/book_builder.hpp"
#include "lobfactor/events_ndjson.hpp"
#include "lobfactor/impact_fit.hpp"
#include "lobfactor/observations_csv.hpp"
#include "lobfactor/seasonal.hpp"
#include "lobfactor/ode.hpp"
#include "lobfactor/matfun.hpp"
#include "lobfactor/sde_calib.hpp"
#include "lobfactor/dynamics.hpp"
#include "lobfactor/synth.hpp"
#include "lobfactor/report_json.hpp"
