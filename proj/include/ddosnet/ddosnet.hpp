#pragma once

#include "ddosnet/config.hpp"
#include "ddosnet/csv.hpp"
#include "ddosnet/error.hpp"
#include "ddosnet/flow_data.hpp"
#include "ddosnet/matrix.hpp"
#include "ddosnet/metrics.hpp"
#include "ddosnet/model_io.hpp"
#include "ddosnet/nn/adagrad.hpp"
#include "ddosnet/nn/gradcheck.hpp"
#include "ddosnet/nn/layers.hpp"
#include "ddosnet/nn/losses.hpp"
#include "ddosnet/nn/model.hpp"
#include "ddosnet/pipeline.hpp"
#include "ddosnet/random.hpp"
#include "ddosnet/smote.hpp"
#include "ddosnet/trainer.hpp"
