#ifndef STGAN_STGAN_HPP
#define STGAN_STGAN_HPP

#include "stgan/error.hpp"
#include "stgan/core_types.hpp"
#include "stgan/config.hpp"
#include "stgan/image_io.hpp"
#include "stgan/ingest.hpp"
#include "stgan/synthetic.hpp"
#include "stgan/networks.hpp"
#include "stgan/losses.hpp"
#include "stgan/model.hpp"
#include "stgan/trainer.hpp"
#include "stgan/inference.hpp"
#include "stgan/metrics.hpp"

#endif  // STGAN_STGAN_HPP
