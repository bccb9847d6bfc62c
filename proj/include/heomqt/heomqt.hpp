// heomqt.hpp: umbrella header

#pragma once

#include "heomqt/bath.hpp"
#include "heomqt/config.hpp"
#include "heomqt/core.hpp"
#include "heomqt/dynamics.hpp"
#include "heomqt/hierarchy.hpp"
#include "heomqt/krylov.hpp"
#include "heomqt/models.hpp"
#include "heomqt/observables.hpp"
#include "heomqt/operators.hpp"
#include "heomqt/redfield.hpp"
#include "heomqt/sweep.hpp"
