#pragma once

#include "ucrbm/circuit.hpp"
#include "ucrbm/errors.hpp"
#include "ucrbm/estimators.hpp"
#include "ucrbm/exact.hpp"
#include "ucrbm/hamiltonians.hpp"
#include "ucrbm/identities.hpp"
#include "ucrbm/ite.hpp"
#include "ucrbm/parallel.hpp"
#include "ucrbm/pauli.hpp"
#include "ucrbm/pauli_io.hpp"
#include "ucrbm/rbm.hpp"
#include "ucrbm/rng.hpp"
#include "ucrbm/state.hpp"
