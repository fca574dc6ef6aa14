#ifndef CONFOUND_HPP
#define CONFOUND_HPP

#include "confound/error.hpp"
#include "confound/special.hpp"
#include "confound/functions.hpp"
#include "confound/covmodels.hpp"
#include "confound/model_json.hpp"
#include "confound/design.hpp"
#include "confound/rng.hpp"
#include "confound/fields.hpp"
#include "confound/operators.hpp"
#include "confound/estimators.hpp"
#include "confound/gls.hpp"
#include "confound/estimability.hpp"
#include "confound/thread_pool.hpp"
#include "confound/config.hpp"
#include "confound/presets.hpp"
#include "confound/harness.hpp"
#include "confound/report_io.hpp"
#include "confound/sample_io.hpp"

#endif
