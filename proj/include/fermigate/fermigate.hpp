#pragma once

// Core library. config.hpp and cli.hpp additionally need yaml-cpp.
#include "fermigate/dense.hpp"
#include "fermigate/errors.hpp"
#include "fermigate/grid_basis.hpp"
#include "fermigate/iterative_eigen.hpp"
#include "fermigate/manybody.hpp"
#include "fermigate/mb_spectrum.hpp"
#include "fermigate/neumann.hpp"
#include "fermigate/parallel.hpp"
#include "fermigate/report.hpp"
#include "fermigate/simplex.hpp"
#include "fermigate/slater_basis.hpp"
#include "fermigate/sp_spectrum.hpp"
#include "fermigate/sym_eigen.hpp"
#include "fermigate/sym_matrix.hpp"
#include "fermigate/verify.hpp"
#include "fermigate/wavefunction.hpp"
