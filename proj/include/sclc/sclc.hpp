#pragma once

// Umbrella header: supervised-contrastive training, cost-sensitive
// fine-tuning, and saliency explanation for small image classifiers.

#include "sclc/augment.hpp"
#include "sclc/cam.hpp"
#include "sclc/cost.hpp"
#include "sclc/data.hpp"
#include "sclc/engine.hpp"
#include "sclc/image_io.hpp"
#include "sclc/losses.hpp"
#include "sclc/metrics.hpp"
#include "sclc/model.hpp"
#include "sclc/optimizer.hpp"
#include "sclc/pipeline.hpp"
#include "sclc/rng.hpp"
#include "sclc/tensor.hpp"
