#pragma once

#include "rlnn/errors.hpp"
#include "rlnn/market_model.hpp"
#include "rlnn/hedge_net.hpp"
#include "rlnn/bermudan_engine.hpp"
#include "rlnn/lsm.hpp"
#include "rlnn/cos.hpp"
#include "rlnn/exposure.hpp"
