#pragma once

#include "sonfis/controller.hpp"
#include "sonfis/dataset.hpp"
#include "sonfis/error.hpp"
#include "sonfis/kv_config.hpp"
#include "sonfis/model_io.hpp"
#include "sonfis/nfis.hpp"
#include "sonfis/plitt.hpp"
#include "sonfis/som.hpp"
