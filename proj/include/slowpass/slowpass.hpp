#pragma once

#include "slowpass/burst.hpp"
#include "slowpass/dhb.hpp"
#include "slowpass/error.hpp"
#include "slowpass/experiment.hpp"
#include "slowpass/faddeeva.hpp"
#include "slowpass/grid.hpp"
#include "slowpass/integrator.hpp"
#include "slowpass/models/cgl.hpp"
#include "slowpass/models/lactotroph.hpp"
#include "slowpass/models/ramp.hpp"
#include "slowpass/models/source.hpp"
#include "slowpass/qss_hopf.hpp"
#include "slowpass/spatial.hpp"
#include "slowpass/trajectory_io.hpp"
