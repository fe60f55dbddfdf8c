#pragma once

#include "iptwmi/balance.hpp"
#include "iptwmi/dataset.hpp"
#include "iptwmi/errors.hpp"
#include "iptwmi/glm.hpp"
#include "iptwmi/harness.hpp"
#include "iptwmi/iptw.hpp"
#include "iptwmi/linalg.hpp"
#include "iptwmi/mice.hpp"
#include "iptwmi/oracle.hpp"
#include "iptwmi/rng.hpp"
#include "iptwmi/simgen.hpp"
#include "iptwmi/strategies.hpp"
