#pragma once

#include <vector>

#include "cabandit/core.hpp"

namespace cabandit {

/// RBF kernel exp(-||x - y||^2 / (2 sigma^2)).
struct KernelSpec {
    double sigma = 3.0;

    double operator()(const Vector& x, const Vector& y) const;
};

double kernel_eval(const KernelSpec& spec, const Context& x, const Context& y);

struct KlrOptions {
    int max_iter = 100;
    double tol = 1e-8;         // target norm of the objective gradient
    double accept_tol = 1e-6;  // bound accepted when max_iter is exhausted
};

/// Kernel logistic regression state for one arm.
///
/// Keeps the support set, the Gram matrix K and the lower Cholesky factor of K + beta I.
/// Each new point borders both matrices in O(n^2); weights are warm-started by appending
/// a zero entry.
class KlrState {
public:
    KlrState(KernelSpec spec, double beta, KlrOptions options = {});

    void add_point(const Context& x, int reward);
    void add_point(const Vector& x, int reward);
    /// Drops a support point and refactors from scratch.
    void remove_point(std::size_t index);

    /// Minimizes the regularized negative log-likelihood, warm-started from the current weights.
    /// Returns the number of Newton iterations.
    int fit();

    std::size_t size() const noexcept { return rewards_.size(); }
    bool empty() const noexcept { return rewards_.empty(); }
    const KernelSpec& spec() const noexcept { return spec_; }
    double beta() const noexcept { return beta_; }
    const Matrix& gram() const noexcept { return gram_; }
    const Matrix& chol() const noexcept { return chol_; }
    const Vector& weights() const noexcept { return weights_; }
    const std::vector<int>& rewards() const noexcept { return rewards_; }
    const Vector& point(std::size_t i) const { return points_[i]; }

    /// k_x = [k(X, x)] over the support.
    Vector kernel_column(const Vector& x) const;
    /// sum_X w^X k(X, x).
    double score(const Vector& x) const;

    double objective(const Vector& w) const;
    Vector gradient(const Vector& w) const;

    void set_weights(Vector w);

private:
    void factor_from_scratch();

    KernelSpec spec_;
    double beta_;
    KlrOptions options_;
    std::vector<Vector> points_;
    std::vector<int> rewards_;
    Matrix gram_;
    Matrix chol_;
    Vector weights_;
};

/// Standalone fit of `state`'s objective; returns the minimizing weights without mutating state.
Vector fit_klr(const KlrState& state);

/// beta^-1/2 (k(x,x) - k_x' (K + beta I)^-1 k_x)^1/2; beta^-1/2 sqrt(k(x,x)) on an empty support.
double exploration_bonus(const KlrState& state, const Context& x);

/// mu(sum w k(X, x) + alpha * bonus), clamped like sigmoid.
double klr_predict(const KlrState& state, const Context& x, double alpha, double bonus);

}  // namespace cabandit
