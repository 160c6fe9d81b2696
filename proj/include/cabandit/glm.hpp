#pragma once

#include <vector>

#include "cabandit/core.hpp"

namespace cabandit {

inline constexpr double kProbabilityFloor = 1e-12;

/// Logistic function clamped to [1e-12, 1 - 1e-12].
double sigmoid(double z) noexcept;

/// Unclamped logistic, stable for large |z|. Used inside likelihood fits.
double logistic(double z) noexcept;

/// log(1 + exp(z)) without overflow.
double softplus(double z) noexcept;

/// Per-arm regression data: contexts stacked as rows with binary rewards.
class ObservationSet {
public:
    explicit ObservationSet(int dim = 0) : dim_(dim) {}

    void add(const Vector& x, int reward);
    void add(const Observation& obs) { add(obs.context.features(), obs.reward); }

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return rewards_.size(); }
    bool empty() const noexcept { return rewards_.empty(); }

    Eigen::Map<const Vector> row(std::size_t i) const {
        return {features_.data() + i * static_cast<std::size_t>(dim_), dim_};
    }
    int reward(std::size_t i) const { return rewards_[i]; }

private:
    int dim_;
    std::vector<double> features_;
    std::vector<int> rewards_;
};

struct MleOptions {
    double ridge = 1e-6;   // penalty weight on ||theta||^2, keeps separable data bounded
    int max_iter = 100;
    double tol = 1e-8;     // target norm of the penalized score
    double accept_tol = 1e-6;  // looser bound accepted when max_iter is exhausted
};

struct MleResult {
    Vector theta;
    int iterations = 0;
    double score_norm = 0.0;
};

/// Sum of R log mu(x'theta) + (1 - R) log(1 - mu(x'theta)).
double log_likelihood(const ObservationSet& data, const Vector& theta);

/// Sum of (R - mu(x'theta)) x, the gradient of log_likelihood.
Vector score(const ObservationSet& data, const Vector& theta);

/// Maximizes log_likelihood - ridge ||theta||^2 by damped Newton with backtracking.
/// Throws StateError on empty data and NumericalError if the score cannot be driven below
/// accept_tol.
MleResult fit_mle(const ObservationSet& data, const MleOptions& options = {},
                  const Vector* warm_start = nullptr);

/// Linear-logistic model for one arm with design matrix V = sum x x' and the inverse of
/// V + eps I maintained by rank-one updates.
class LogisticModel {
public:
    static constexpr double kDesignReg = 1e-6;
    static constexpr std::size_t kRefreshInterval = 256;

    explicit LogisticModel(int dim, double design_reg = kDesignReg, MleOptions options = {});

    /// Appends the observation and updates V and its inverse. Does not refit theta.
    void add_observation(const Observation& obs);
    void add_observation(const Vector& x, int reward);

    /// Re-solves the MLE warm-started from the current theta.
    void refit();

    /// mu(x'theta) without bonus.
    double predict(const Context& x) const;
    /// ||x|| in the metric (V + eps I)^-1.
    double bonus_norm(const Context& x) const;
    /// mu(x'theta + alpha ||x||_{(V + eps I)^-1}).
    double ucb_estimate(const Context& x, double alpha) const;

    int dim() const noexcept { return dim_; }
    const Vector& theta() const noexcept { return theta_; }
    const Matrix& design_matrix() const noexcept { return design_; }
    const Matrix& design_inverse() const noexcept { return design_inverse_; }
    double design_reg() const noexcept { return design_reg_; }
    std::size_t num_obs() const noexcept { return data_.size(); }
    const ObservationSet& data() const noexcept { return data_; }
    int last_iterations() const noexcept { return last_iterations_; }

private:
    void check_dim(Eigen::Index d) const;
    void rebuild_inverse();

    int dim_;
    double design_reg_;
    MleOptions options_;
    ObservationSet data_;
    Vector theta_;
    Matrix design_;
    Matrix design_inverse_;
    int last_iterations_ = 0;
};

}  // namespace cabandit
