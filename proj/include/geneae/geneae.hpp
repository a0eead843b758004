#ifndef GENEAE_GENEAE_HPP
#define GENEAE_GENEAE_HPP

/// @file geneae.hpp Umbrella header.

#include "common.hpp"
#include "expr_data.hpp"
#include "nn_core.hpp"
#include "autoencoder.hpp"
#include "transfer.hpp"
#include "pca_baselines.hpp"
#include "eval.hpp"
#include "synth.hpp"

#endif  // GENEAE_GENEAE_HPP
