#pragma once

#include "sstokes/modes.hpp"
#include "sstokes/gaussian.hpp"
#include "sstokes/stokes.hpp"
#include "sstokes/entanglement.hpp"
#include "sstokes/oracle.hpp"
#include "sstokes/report.hpp"
#include "sstokes/dsl.hpp"
