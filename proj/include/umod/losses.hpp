// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "umod/autograd.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace umod::losses {

/// S[i][j] = <img[i], txt[j]>. Rows are expected to be unit norm, so S holds cosines.
Matrix similarity_matrix(const Matrix& image_embeddings, const Matrix& text_embeddings);

/// Bidirectional in-batch contrastive loss over a square similarity matrix:
///
///   L_c = -1/(2N) * sum_i [ log softmax_row(S/tau)[i][i] + log softmax_col(S/tau)[i][i] ]
///
/// Softmaxes are evaluated with max subtraction in log space. Throws on tau <= 0.
double contrastive_loss(const Matrix& similarity, double tau);

struct ContrastiveGradient {
  double loss = 0.0;
  Matrix d_similarity;
  double d_log_tau = 0.0;  // derivative with respect to log(tau)
};
ContrastiveGradient contrastive_loss_gradient(const Matrix& similarity, double tau);

/// Masked-token cross entropy, summed (not averaged) over the masked positions:
///   L_MIM = -sum_{k in mask} log softmax(logits[k])[targets[k]]
/// `targets` holds one visual token per patch; unmasked positions are ignored.
double mim_loss(const Matrix& logits, std::span<const int> targets, std::span<const int> mask);

struct MimGradient {
  double loss = 0.0;
  Matrix d_logits;
};
MimGradient mim_loss_gradient(const Matrix& logits, std::span<const int> targets,
                              std::span<const int> mask);

/// Joint objective: the unweighted sum of the two terms.
double total_loss(double contrastive, double mim);

// Graph nodes wrapping the closed-form gradients above.
ag::Var contrastive(ag::Var similarity, ag::Var log_tau);
ag::Var mim(ag::Var logits, std::span<const int> targets, std::span<const int> mask);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking

struct LossEvaluator {
  std::function<double(std::span<const double>)> loss;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

struct GradCheckOptions {
  std::size_t max_coordinates = 0;  // 0 checks every coordinate
  std::uint64_t seed = 0;           // coordinate sampling when max_coordinates > 0
  double denominator_floor = 1e-8;  // keeps near-zero gradients from dominating
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_coordinate = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t coordinates_checked = 0;
  bool passed = false;
};

/// Compares the analytic gradient against central differences
/// (f(p + h e_i) - f(p - h e_i)) / 2h on the sampled coordinates. The relative
/// error per coordinate is |a - n| / max(|a|, |n|, floor).
/// Throws ErrorKind::Numeric if the loss is non-finite at a perturbed point.
GradCheckReport grad_check(const LossEvaluator& evaluator, std::span<const double> params,
                           double step, double tolerance, const GradCheckOptions& options = {});

}  // namespace umod::losses
