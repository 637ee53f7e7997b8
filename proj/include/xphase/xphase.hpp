#pragma once

// Everything at once.

#include "xphase/errors.hpp"
#include "xphase/parallel.hpp"
#include "xphase/numerics.hpp"
#include "xphase/fft.hpp"
#include "xphase/polynomial.hpp"
#include "xphase/hamiltonian.hpp"
#include "xphase/states.hpp"
#include "xphase/transforms.hpp"
#include "xphase/observables.hpp"
#include "xphase/starprod.hpp"
#include "xphase/evolution.hpp"
#include "xphase/bloch.hpp"
