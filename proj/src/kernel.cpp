#include "cabandit/kernel.hpp"

#include <cmath>

#include <Eigen/IterativeLinearSolvers>

#include "cabandit/errors.hpp"
#include "cabandit/glm.hpp"

namespace cabandit {

double KernelSpec::operator()(const Vector& x, const Vector& y) const {
    if (x.size() != y.size()) throw ArgumentError("kernel arguments differ in dimension");
    return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
}

double kernel_eval(const KernelSpec& spec, const Context& x, const Context& y) {
    return spec(x.features(), y.features());
}

KlrState::KlrState(KernelSpec spec, double beta, KlrOptions options)
    : spec_(spec), beta_(beta), options_(options) {
    if (!(spec.sigma > 0.0)) throw ArgumentError("kernel bandwidth must be > 0");
    if (!(beta > 0.0)) throw ArgumentError("KLR regularization beta must be > 0");
}

void KlrState::add_point(const Context& x, int reward) { add_point(x.features(), reward); }

void KlrState::add_point(const Vector& x, int reward) {
    if (reward != 0 && reward != 1) throw ArgumentError("reward must be 0 or 1");
    if (!points_.empty() && x.size() != points_.front().size())
        throw ArgumentError("support point dimension mismatch");

    const auto n = static_cast<Eigen::Index>(points_.size());
    const Vector k = kernel_column(x);
    const double kxx = spec_(x, x);

    gram_.conservativeResize(n + 1, n + 1);
    gram_.block(0, n, n, 1) = k;
    gram_.block(n, 0, 1, n) = k.transpose();
    gram_(n, n) = kxx;

    chol_.conservativeResize(n + 1, n + 1);
    chol_.block(0, n, n, 1).setZero();
    Vector l = k;
    if (n > 0) chol_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solveInPlace(l);
    const double pivot = kxx + beta_ - l.squaredNorm();
    chol_.block(n, 0, 1, n) = l.transpose();
    chol_(n, n) = std::sqrt(std::max(pivot, 0.0));

    points_.push_back(x);
    rewards_.push_back(reward);
    weights_.conservativeResize(n + 1);
    weights_[n] = 0.0;

    if (!(pivot > 0.0)) factor_from_scratch();
}

void KlrState::remove_point(std::size_t index) {
    if (index >= points_.size()) throw ArgumentError("support index out of range");
    points_.erase(points_.begin() + static_cast<std::ptrdiff_t>(index));
    rewards_.erase(rewards_.begin() + static_cast<std::ptrdiff_t>(index));
    const auto n = static_cast<Eigen::Index>(points_.size());
    Vector w(n);
    for (Eigen::Index i = 0, j = 0; i <= n; ++i) {
        if (static_cast<std::size_t>(i) == index) continue;
        w[j++] = weights_[i];
    }
    weights_ = std::move(w);
    gram_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            gram_(i, j) = gram_(j, i) = spec_(points_[static_cast<std::size_t>(i)], points_[static_cast<std::size_t>(j)]);
    factor_from_scratch();
}

void KlrState::factor_from_scratch() {
    const auto n = gram_.rows();
    Matrix reg = gram_;
    reg.diagonal().array() += beta_;
    Eigen::LLT<Matrix> llt(reg);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky of K + beta I failed", 0.0);
    chol_ = Matrix(llt.matrixL());
    if (chol_.rows() != n) chol_.resize(n, n);
}

Vector KlrState::kernel_column(const Vector& x) const {
    Vector k(static_cast<Eigen::Index>(points_.size()));
    for (std::size_t i = 0; i < points_.size(); ++i) k[static_cast<Eigen::Index>(i)] = spec_(points_[i], x);
    return k;
}

double KlrState::score(const Vector& x) const {
    if (points_.empty()) return 0.0;
    return weights_.dot(kernel_column(x));
}

double KlrState::objective(const Vector& w) const {
    const Vector f = gram_ * w;
    double total = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) total += softplus(f[i]) - rewards_[static_cast<std::size_t>(i)] * f[i];
    return total + beta_ * w.dot(f);
}

Vector KlrState::gradient(const Vector& w) const {
    const Vector f = gram_ * w;
    Vector g(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i)
        g[i] = logistic(f[i]) - rewards_[static_cast<std::size_t>(i)] + 2.0 * beta_ * w[i];
    return gram_ * g;
}

void KlrState::set_weights(Vector w) {
    if (w.size() != static_cast<Eigen::Index>(points_.size())) throw ArgumentError("weight length mismatch");
    weights_ = std::move(w);
}

namespace {

// Solves (W K + 2 beta I) step = -r. With D = W^1/2 this is the SPD system
// (D K D + 2 beta I) z = -r / D, step = D z, handled by conjugate gradients in O(n^2) per
// iteration; dense LU is the fallback when CG stalls or W has vanishing entries.
Vector newton_step(const Matrix& K, const Vector& wdiag, const Vector& r, double beta) {
    const double two_beta = 2.0 * beta;
    if (wdiag.minCoeff() > 1e-200) {
        const Vector d = wdiag.cwiseSqrt();
        Matrix sys = d.asDiagonal() * K * d.asDiagonal();
        sys.diagonal().array() += two_beta;
        Eigen::ConjugateGradient<Matrix, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(1e-13);
        cg.setMaxIterations(static_cast<Eigen::Index>(std::max<Eigen::Index>(50, r.size())));
        cg.compute(sys);
        const Vector z = cg.solve(-r.cwiseQuotient(d));
        if (cg.info() == Eigen::Success && z.allFinite()) return d.cwiseProduct(z);
    }
    Matrix system = wdiag.asDiagonal() * K;
    system.diagonal().array() += two_beta;
    return -system.partialPivLu().solve(r);
}

// Newton on the KLR objective. With H = K (W K + 2 beta I) and grad = K r where
// r = mu(Kw) - R + 2 beta w, the step solves (W K + 2 beta I) step = -r, which stays
// well-posed when K is singular (repeated support points).
int newton_klr(const KlrState& s, Vector& w, const KlrOptions& options) {
    const auto n = static_cast<Eigen::Index>(s.size());
    const Matrix& K = s.gram();
    double value = s.objective(w);
    int iter = 0;
    for (; iter < options.max_iter; ++iter) {
        const Vector f = K * w;
        Vector r(n), wdiag(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = logistic(f[i]);
            r[i] = p - s.rewards()[static_cast<std::size_t>(i)] + 2.0 * s.beta() * w[i];
            wdiag[i] = p * (1.0 - p);
        }
        const Vector grad = K * r;
        if (grad.norm() <= options.tol) break;

        const Vector step = newton_step(K, wdiag, r, s.beta());
        const double slope = grad.dot(step);

        bool accepted = false;
        if (-0.5 * slope > 1e-11 * (1.0 + std::abs(value))) {
            double t = 1.0;
            for (int k = 0; k < 60; ++k, t *= 0.5) {
                const Vector candidate = w + t * step;
                const double v = s.objective(candidate);
                if (v <= value + 1e-4 * t * slope) {
                    w = candidate;
                    value = v;
                    accepted = true;
                    break;
                }
            }
        } else {
            // predicted decrease is below the objective's rounding; judge steps by the gradient
            const double gn = grad.norm();
            double t = 1.0;
            for (int k = 0; k < 60 && !accepted; ++k, t *= 0.5) {
                const Vector candidate = w + t * step;
                if (s.gradient(candidate).norm() < gn) {
                    w = candidate;
                    value = s.objective(w);
                    accepted = true;
                }
            }
        }
        if (!accepted) break;
    }
    const double gnorm = s.gradient(w).norm();
    if (!w.allFinite() || gnorm > options.accept_tol)
        throw NumericalError("KLR Newton did not converge after " + std::to_string(iter) + " iterations", gnorm);
    return iter;
}

}  // namespace

int KlrState::fit() {
    if (points_.empty()) return 0;
    Vector w = weights_;
    const int iters = newton_klr(*this, w, options_);
    weights_ = std::move(w);
    return iters;
}

Vector fit_klr(const KlrState& state) {
    if (state.empty()) throw StateError("fit_klr on an empty support");
    Vector w = state.weights();
    newton_klr(state, w, KlrOptions{});
    return w;
}

double exploration_bonus(const KlrState& state, const Context& x) {
    const auto& v = x.features();
    const double kxx = state.spec()(v, v);
    double interior = kxx;
    if (!state.empty()) {
        Vector z = state.kernel_column(v);
        state.chol().triangularView<Eigen::Lower>().solveInPlace(z);
        interior -= z.squaredNorm();
    }
    if (interior < -1e-10) throw NumericalError("negative posterior variance in exploration bonus", interior);
    return std::sqrt(std::max(interior, 0.0) / state.beta());
}

double klr_predict(const KlrState& state, const Context& x, double alpha, double bonus) {
    return sigmoid(state.score(x.features()) + alpha * bonus);
}

}  // namespace cabandit
