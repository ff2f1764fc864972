// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <span>

#include "mcvqa/corpus/clip.hpp"
#include "mcvqa/model/config.hpp"
#include "mcvqa/model/parameters.hpp"
#include "mcvqa/text/sequence.hpp"

namespace mcvqa::model {

/// Token, type and position tables plus the optional self-attention block.
///
/// The self-attention block scores token pairs by the dot product of their
/// token embeddings times a learned scale, never lets a token attend to
/// itself or to padding, and adds the attended value projection back onto the
/// summed embeddings.
void declare_encoder(ParameterSet<float>& params, const ModelConfig& config, std::mt19937_64& rng);

/// Sum of token, type and position embeddings for each sequence, shaped
/// [S, L, d_text], where L is the longest unpadded length among `seqs`.
template <typename Real>
Var<Real> embed_tokens(const Bound<Real>& p, std::span<const text::TokenSequence> seqs);

/// Pooled representation of each sequence, shaped [S, d_text].
template <typename Real>
Var<Real> encode_text(const Bound<Real>& p, std::span<const text::TokenSequence> seqs);

/// Frame features tiled over the answer options: [options, T, I, d_visual].
template <typename Real>
Tensor<Real> encode_visual(const corpus::ClipExample& clip, std::size_t options);

}  // namespace mcvqa::model
