// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/losses.hpp"

#include "umod/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace umod::losses {

Matrix similarity_matrix(const Matrix& image_embeddings, const Matrix& text_embeddings) {
  if (image_embeddings.rows() != text_embeddings.rows())
    fail(ErrorKind::Data, "similarity_matrix: row-count mismatch (" +
                              std::to_string(image_embeddings.rows()) + " vs " +
                              std::to_string(text_embeddings.rows()) + ")");
  if (image_embeddings.cols() != text_embeddings.cols())
    fail(ErrorKind::Data, "similarity_matrix: embedding dimension mismatch");
  return image_embeddings * text_embeddings.transpose();
}

namespace {

void check_square(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() == 0)
    fail(ErrorKind::Data, "contrastive_loss: similarity matrix must be square and nonempty");
}

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    fail(ErrorKind::Config, "contrastive_loss: temperature tau must be positive, got " +
                                std::to_string(tau));
}

// Row-wise log-softmax with max subtraction.
Matrix log_softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    const double lse = m + std::log((z.row(r).array() - m).exp().sum());
    out.row(r) = z.row(r).array() - lse;
  }
  return out;
}

void check_mim_inputs(const Matrix& logits, std::span<const int> targets,
                      std::span<const int> mask) {
  if (mask.empty()) fail(ErrorKind::Data, "mim_loss: mask set is empty");
  if (static_cast<Index>(targets.size()) != logits.rows())
    fail(ErrorKind::Data, "mim_loss: expected one target per logit row");
  std::set<int> seen;
  for (int k : mask) {
    if (k < 0 || k >= logits.rows())
      fail(ErrorKind::Data, "mim_loss: mask index " + std::to_string(k) + " out of range");
    if (!seen.insert(k).second)
      fail(ErrorKind::Data, "mim_loss: duplicate mask index " + std::to_string(k));
    const int t = targets[static_cast<std::size_t>(k)];
    if (t < 0 || t >= logits.cols())
      fail(ErrorKind::Data, "mim_loss: target " + std::to_string(t) + " out of range");
  }
}

}  // namespace

double contrastive_loss(const Matrix& similarity, double tau) {
  return contrastive_loss_gradient(similarity, tau).loss;
}

ContrastiveGradient contrastive_loss_gradient(const Matrix& similarity, double tau) {
  check_square(similarity);
  check_tau(tau);
  const Index n = similarity.rows();
  const Matrix z = similarity / tau;
  const Matrix log_row = log_softmax_rows(z);
  const Matrix log_col = log_softmax_rows(z.transpose()).transpose();

  double acc = 0.0;
  for (Index i = 0; i < n; ++i) acc += log_row(i, i) + log_col(i, i);

  ContrastiveGradient out;
  out.loss = -acc / (2.0 * static_cast<double>(n));

  // dL/dZ = (P_row - I + P_col - I) / 2N
  Matrix dz = log_row.array().exp() + log_col.array().exp();
  dz.diagonal().array() -= 2.0;
  dz /= 2.0 * static_cast<double>(n);
  out.d_log_tau = -(dz.array() * z.array()).sum();
  out.d_similarity = dz / tau;
  return out;
}

double mim_loss(const Matrix& logits, std::span<const int> targets, std::span<const int> mask) {
  return mim_loss_gradient(logits, targets, mask).loss;
}

MimGradient mim_loss_gradient(const Matrix& logits, std::span<const int> targets,
                              std::span<const int> mask) {
  check_mim_inputs(logits, targets, mask);
  MimGradient out;
  out.d_logits.setZero(logits.rows(), logits.cols());
  for (int k : mask) {
    const Matrix row = logits.row(k);
    const Matrix lp = log_softmax_rows(row);
    const int t = targets[static_cast<std::size_t>(k)];
    out.loss -= lp(0, t);
    out.d_logits.row(k) = lp.array().exp();
    out.d_logits(k, t) -= 1.0;
  }
  return out;
}

double total_loss(double contrastive, double mim) { return contrastive + mim; }

ag::Var contrastive(ag::Var similarity, ag::Var log_tau) {
  ag::Graph& g = *similarity.graph();
  if (log_tau.graph() != &g) fail(ErrorKind::Config, "contrastive: operands from different graphs");
  const double tau = std::exp(log_tau.scalar());
  ContrastiveGradient cg = contrastive_loss_gradient(similarity.value(), tau);
  Matrix out(1, 1);
  out(0, 0) = cg.loss;
  const int is = similarity.id(), it = log_tau.id();
  return g.make(std::move(out), g.requires_grad(is) || g.requires_grad(it),
                [is, it, cg = std::move(cg)](ag::Graph& g, int self) {
                  const double up = g.grad(self)(0, 0);
                  if (g.requires_grad(is)) g.grad(is) += up * cg.d_similarity;
                  if (g.requires_grad(it)) g.grad(it)(0, 0) += up * cg.d_log_tau;
                });
}

ag::Var mim(ag::Var logits, std::span<const int> targets, std::span<const int> mask) {
  ag::Graph& g = *logits.graph();
  MimGradient mg = mim_loss_gradient(logits.value(), targets, mask);
  Matrix out(1, 1);
  out(0, 0) = mg.loss;
  const int il = logits.id();
  return g.make(std::move(out), g.requires_grad(il),
                [il, mg = std::move(mg)](ag::Graph& g, int self) {
                  g.grad(il) += g.grad(self)(0, 0) * mg.d_logits;
                });
}

GradCheckReport grad_check(const LossEvaluator& evaluator, std::span<const double> params,
                           double step, double tolerance, const GradCheckOptions& options) {
  if (!(step > 0.0)) fail(ErrorKind::Config, "grad_check: step must be positive");
  std::vector<double> point(params.begin(), params.end());
  const std::vector<double> analytic = evaluator.gradient(point);
  if (analytic.size() != point.size())
    fail(ErrorKind::Config, "grad_check: gradient size does not match parameter count");

  std::vector<std::size_t> coords(point.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (options.max_coordinates > 0 && options.max_coordinates < coords.size()) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coordinates);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  for (std::size_t i : coords) {
    const double saved = point[i];
    point[i] = saved + step;
    const double up = evaluator.loss(point);
    point[i] = saved - step;
    const double down = evaluator.loss(point);
    point[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      fail(ErrorKind::Numeric,
           "grad_check: non-finite loss at perturbed coordinate " + std::to_string(i));
    const double numeric = (up - down) / (2.0 * step);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), options.denominator_floor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > report.max_relative_error || report.coordinates_checked == 0) {
      report.max_relative_error = rel;
      report.worst_coordinate = i;
      report.analytic_at_worst = analytic[i];
      report.numeric_at_worst = numeric;
    }
    ++report.coordinates_checked;
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace umod::losses
