#include "cabandit/glm.hpp"

#include <algorithm>
#include <cmath>

#include "cabandit/errors.hpp"

namespace cabandit {

double logistic(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double sigmoid(double z) noexcept {
    return std::clamp(logistic(z), kProbabilityFloor, 1.0 - kProbabilityFloor);
}

double softplus(double z) noexcept {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

void ObservationSet::add(const Vector& x, int reward) {
    if (dim_ == 0) dim_ = static_cast<int>(x.size());
    if (x.size() != dim_) throw ArgumentError("observation dimension mismatch");
    if (reward != 0 && reward != 1) throw ArgumentError("reward must be 0 or 1");
    features_.insert(features_.end(), x.data(), x.data() + x.size());
    rewards_.push_back(reward);
}

double log_likelihood(const ObservationSet& data, const Vector& theta) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double z = data.row(i).dot(theta);
        total += data.reward(i) * z - softplus(z);
    }
    return total;
}

Vector score(const ObservationSet& data, const Vector& theta) {
    Vector g = Vector::Zero(theta.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.row(i);
        g += (data.reward(i) - logistic(x.dot(theta))) * x;
    }
    return g;
}

namespace {

double penalized_objective(const ObservationSet& data, const Vector& theta, double ridge) {
    return log_likelihood(data, theta) - ridge * theta.squaredNorm();
}

}  // namespace

MleResult fit_mle(const ObservationSet& data, const MleOptions& options, const Vector* warm_start) {
    if (data.empty()) throw StateError("fit_mle on an empty dataset");
    const int d = data.dim();
    Vector theta = (warm_start && warm_start->size() == d) ? *warm_start : Vector::Zero(d);

    const double curvature_floor = std::max(2.0 * options.ridge, 1e-12);
    MleResult result;
    double objective = penalized_objective(data, theta, options.ridge);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        Vector grad = Vector::Zero(d);
        Matrix info = Matrix::Zero(d, d);
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto x = data.row(i);
            const double p = logistic(x.dot(theta));
            grad += (data.reward(i) - p) * x;
            info.selfadjointView<Eigen::Lower>().rankUpdate(x, p * (1.0 - p));
        }
        grad -= 2.0 * options.ridge * theta;
        result.score_norm = grad.norm();
        result.iterations = iter;
        if (result.score_norm <= options.tol) break;

        info.diagonal().array() += curvature_floor;
        const Vector step = info.selfadjointView<Eigen::Lower>().ldlt().solve(grad);
        const double slope = grad.dot(step);

        bool accepted = false;
        if (0.5 * slope > 1e-11 * (1.0 + std::abs(objective))) {
            double t = 1.0;
            for (int k = 0; k < 60; ++k, t *= 0.5) {
                const Vector candidate = theta + t * step;
                const double value = penalized_objective(data, candidate, options.ridge);
                if (value >= objective + 1e-4 * t * slope) {
                    theta = candidate;
                    objective = value;
                    accepted = true;
                    break;
                }
            }
        } else {
            // The predicted ascent is below the rounding of the objective; judge steps by the score.
            double t = 1.0;
            for (int k = 0; k < 60 && !accepted; ++k, t *= 0.5) {
                const Vector candidate = theta + t * step;
                const Vector g = score(data, candidate) - 2.0 * options.ridge * candidate;
                if (g.norm() < result.score_norm) {
                    theta = candidate;
                    objective = penalized_objective(data, theta, options.ridge);
                    accepted = true;
                }
            }
        }
        result.iterations = iter + 1;
        if (!accepted) break;
    }

    Vector final_grad = score(data, theta) - 2.0 * options.ridge * theta;
    result.score_norm = final_grad.norm();
    if (!theta.allFinite() || result.score_norm > options.accept_tol)
        throw NumericalError("logistic MLE did not converge after " + std::to_string(result.iterations) +
                                 " Newton iterations",
                             result.score_norm);
    result.theta = std::move(theta);
    return result;
}

LogisticModel::LogisticModel(int dim, double design_reg, MleOptions options)
    : dim_(dim),
      design_reg_(design_reg),
      options_(options),
      data_(dim),
      theta_(Vector::Zero(dim)),
      design_(Matrix::Zero(dim, dim)),
      design_inverse_(Matrix::Identity(dim, dim) / design_reg) {
    if (dim < 1) throw ArgumentError("model dimension must be >= 1");
    if (!(design_reg > 0.0)) throw ArgumentError("design regularizer must be > 0");
}

void LogisticModel::check_dim(Eigen::Index d) const {
    if (d != dim_)
        throw ArgumentError("context dimension " + std::to_string(d) + " does not match model dimension " +
                            std::to_string(dim_));
}

void LogisticModel::add_observation(const Observation& obs) {
    add_observation(obs.context.features(), obs.reward);
}

void LogisticModel::add_observation(const Vector& x, int reward) {
    check_dim(x.size());
    data_.add(x, reward);
    design_.noalias() += x * x.transpose();

    if (data_.size() % kRefreshInterval == 0) {
        rebuild_inverse();
        return;
    }
    // Sherman-Morrison on (V + eps I)^-1.
    const Vector ax = design_inverse_ * x;
    design_inverse_.noalias() -= (ax * ax.transpose()) / (1.0 + x.dot(ax));
}

void LogisticModel::rebuild_inverse() {
    Matrix reg = design_;
    reg.diagonal().array() += design_reg_;
    design_inverse_ = reg.llt().solve(Matrix::Identity(dim_, dim_));
}

void LogisticModel::refit() {
    const auto result = fit_mle(data_, options_, &theta_);
    theta_ = result.theta;
    last_iterations_ = result.iterations;
}

double LogisticModel::predict(const Context& x) const {
    check_dim(x.dim());
    return sigmoid(x.features().dot(theta_));
}

double LogisticModel::bonus_norm(const Context& x) const {
    check_dim(x.dim());
    const auto& v = x.features();
    return std::sqrt(std::max(0.0, v.dot(design_inverse_ * v)));
}

double LogisticModel::ucb_estimate(const Context& x, double alpha) const {
    check_dim(x.dim());
    return sigmoid(x.features().dot(theta_) + alpha * bonus_norm(x));
}

}  // namespace cabandit
