#pragma once

// Umbrella header: training engine, power-of-two quantizer, incremental
// quantization driver, bit-packed model containers and the shift-add
// runtime.

#include "inq/analysis.hpp"
#include "inq/codec.hpp"
#include "inq/dataset.hpp"
#include "inq/driver.hpp"
#include "inq/engine.hpp"
#include "inq/forward.hpp"
#include "inq/idx.hpp"
#include "inq/layers.hpp"
#include "inq/mask.hpp"
#include "inq/model_io.hpp"
#include "inq/network.hpp"
#include "inq/partition.hpp"
#include "inq/quantized_model.hpp"
#include "inq/quantizer.hpp"
#include "inq/random.hpp"
#include "inq/schedule.hpp"
#include "inq/shift.hpp"
#include "inq/tensor.hpp"
