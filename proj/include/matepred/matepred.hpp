#pragma once

#include "matepred/autodiff.hpp"
#include "matepred/checkpoint.hpp"
#include "matepred/contact_map.hpp"
#include "matepred/dataset.hpp"
#include "matepred/features.hpp"
#include "matepred/grad_check.hpp"
#include "matepred/metrics.hpp"
#include "matepred/model.hpp"
#include "matepred/optim.hpp"
#include "matepred/physchem.hpp"
#include "matepred/sequence.hpp"
#include "matepred/store.hpp"
#include "matepred/training.hpp"
