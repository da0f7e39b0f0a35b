#pragma once

#include "mtgw/rational.hpp"
#include "mtgw/errors.hpp"
#include "mtgw/linalg.hpp"
#include "mtgw/marked_tree.hpp"
#include "mtgw/distribution.hpp"
#include "mtgw/offspring.hpp"
#include "mtgw/sampler.hpp"
#include "mtgw/progeny_exact.hpp"
#include "mtgw/laplace.hpp"
#include "mtgw/walk_asymptotics.hpp"
#include "mtgw/convergence_lab.hpp"
