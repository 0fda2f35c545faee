#include "kriging.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "error.hpp"

namespace krigrid {
namespace {

std::vector<SamplePoint> merge_duplicates(std::vector<SamplePoint> samples) {
    std::map<std::pair<double, double>, std::pair<double, int>> grouped;
    bool any_dup = false;
    for (const auto& s : samples) {
        auto [it, inserted] = grouped.try_emplace({s.x, s.y}, std::pair{s.value, 1});
        if (!inserted) {
            it->second.first += s.value;
            it->second.second += 1;
            any_dup = true;
        }
    }
    if (!any_dup)
        return samples;
    // Keep first-appearance order so seeded runs stay reproducible.
    std::vector<SamplePoint> merged;
    merged.reserve(grouped.size());
    std::map<std::pair<double, double>, bool> emitted;
    for (const auto& s : samples) {
        auto key = std::pair{s.x, s.y};
        if (emitted[key])
            continue;
        emitted[key] = true;
        const auto& [sum, count] = grouped[key];
        merged.push_back({s.x, s.y, sum / count});
    }
    return merged;
}

bool nearly_singular(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
    Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
    double dmax = diag.maxCoeff();
    return dmax <= 0.0 || diag.minCoeff() < 1e-12 * dmax;
}

} // namespace

KrigingModel::KrigingModel(std::vector<SamplePoint> samples, VariogramModel variogram)
    : samples_(merge_duplicates(std::move(samples))), variogram_(variogram) {
    variogram_.validate();
    auto n = static_cast<Eigen::Index>(samples_.size());
    require(n >= 2, ErrorCode::invalid_argument,
            "kriging needs at least 2 distinct sample locations");

    // [ Gamma  1 ] [w ]   [gamma_q]
    // [ 1^T    0 ] [mu] = [   1   ]
    Eigen::MatrixXd a(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double d = std::hypot(samples_[static_cast<std::size_t>(i)].x -
                                      samples_[static_cast<std::size_t>(j)].x,
                                  samples_[static_cast<std::size_t>(i)].y -
                                      samples_[static_cast<std::size_t>(j)].y);
            double g = semivariance(variogram_, d);
            a(i, j) = g;
            a(j, i) = g;
        }
        a(i, n) = 1.0;
        a(n, i) = 1.0;
    }
    a(n, n) = 0.0;

    lu_.compute(a);
    if (nearly_singular(lu_)) {
        // One retry with a tiny jitter on the sample block diagonal (acts as
        // an implicit nugget) before giving up.
        for (Eigen::Index i = 0; i < n; ++i)
            a(i, i) += 1e-10;
        lu_.compute(a);
        used_jitter_ = true;
        require(!nearly_singular(lu_), ErrorCode::singular_system,
                "ordinary kriging system is singular");
    }

    Eigen::VectorXd v(n + 1);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = samples_[static_cast<std::size_t>(i)].value;
    v(n) = 0.0;
    dual_ = lu_.solve(v);
}

Eigen::VectorXd KrigingModel::rhs_at(double x, double y) const {
    auto n = static_cast<Eigen::Index>(samples_.size());
    Eigen::VectorXd b(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples_[static_cast<std::size_t>(i)];
        b(i) = semivariance(variogram_, std::hypot(x - s.x, y - s.y));
    }
    b(n) = 1.0;
    return b;
}

Prediction KrigingModel::predict(double x, double y) const {
    auto n = static_cast<Eigen::Index>(samples_.size());
    Eigen::VectorXd b = rhs_at(x, y);
    Eigen::VectorXd w = lu_.solve(b);

    double wsum = w.head(n).sum();
    require(std::abs(wsum - 1.0) < 1e-9, ErrorCode::singular_system,
            "kriging weights do not sum to 1 (ill-conditioned system)");

    Prediction p;
    p.mean = b.dot(dual_); // same expression render_field uses
    p.variance = b.dot(w); // w^T gamma_q + mu
    return p;
}

double KrigingModel::predict_mean(double x, double y) const {
    return rhs_at(x, y).dot(dual_);
}

QStats KrigingModel::cross_validate() const {
    auto n = static_cast<Eigen::Index>(samples_.size());
    require(n >= 3, ErrorCode::invalid_argument, "cross-validation needs at least 3 samples");

    // Grow the bordered system one sample at a time, keeping the explicit
    // inverse. Layout puts the Lagrange row first so each new sample appends
    // at the end; the border column equals the prediction right-hand side, so
    // the Schur complement is minus the kriging variance at the new point.
    Eigen::MatrixXd inv(2, 2);
    inv << 0, 1, 1, 0; // [[0,1],[1,0]] is its own inverse

    double sum_e = 0, sum_e2 = 0, sum_log_var = 0;
    for (Eigen::Index k = 1; k < n; ++k) {
        const auto& q = samples_[static_cast<std::size_t>(k)];
        Eigen::VectorXd c(k + 1);
        c(0) = 1.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto& s = samples_[static_cast<std::size_t>(i)];
            c(i + 1) = semivariance(variogram_, std::hypot(q.x - s.x, q.y - s.y));
        }

        Eigen::VectorXd z = inv * c; // z(0) = mu, z(1..k) = weights
        double var_hat = c.dot(z);
        require(var_hat > 1e-300, ErrorCode::degenerate,
                "zero prediction variance in cross-validation (degenerate model)");
        double mean_hat = 0;
        for (Eigen::Index i = 0; i < k; ++i)
            mean_hat += z(i + 1) * samples_[static_cast<std::size_t>(i)].value;

        double e = (q.value - mean_hat) / std::sqrt(var_hat);
        sum_e += e;
        sum_e2 += e * e;
        sum_log_var += std::log(var_hat);

        if (k == n - 1)
            break; // no need to grow past the last sample
        double s = -var_hat; // Schur complement: 0 - c^T inv c
        Eigen::MatrixXd next(k + 2, k + 2);
        next.topLeftCorner(k + 1, k + 1) = inv + (z * z.transpose()) / s;
        next.topRightCorner(k + 1, 1) = -z / s;
        next.bottomLeftCorner(1, k + 1) = -z.transpose() / s;
        next(k + 1, k + 1) = 1.0 / s;
        inv = std::move(next);
    }

    double m = static_cast<double>(n - 1);
    QStats stats;
    stats.q1 = sum_e / m;
    stats.q2 = sum_e2 / m;
    stats.cr = stats.q2 * std::exp(sum_log_var / m);
    require(std::isfinite(stats.q1) && std::isfinite(stats.q2) && std::isfinite(stats.cr),
            ErrorCode::degenerate, "cross-validation statistics are not finite");
    return stats;
}

ScalarField render_field(const KrigingModel& model, int width, int height,
                         const Extent& extent, int threads) {
    require(width >= 1 && height >= 1, ErrorCode::invalid_argument,
            "render dimensions must be >= 1");
    require(extent.x1 > extent.x0 && extent.y1 > extent.y0, ErrorCode::invalid_argument,
            "render extent must have positive area");

    ScalarField field(width, height);
    double sx = (extent.x1 - extent.x0) / width;
    double sy = (extent.y1 - extent.y0) / height;

    auto run_rows = [&](int row0, int row1) {
        for (int j = row0; j < row1; ++j) {
            double y = extent.y0 + (j + 0.5) * sy;
            for (int i = 0; i < width; ++i) {
                double x = extent.x0 + (i + 0.5) * sx;
                double v = model.predict_mean(x, y);
                field.at(i, j) = std::clamp(v, 0.0, 1.0);
            }
        }
    };

    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, height);
    if (n_threads == 1) {
        run_rows(0, height);
        return field;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    int chunk = (height + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        int row0 = t * chunk;
        int row1 = std::min(height, row0 + chunk);
        if (row0 >= row1)
            break;
        pool.emplace_back(run_rows, row0, row1);
    }
    for (auto& th : pool)
        th.join();
    return field;
}

} // namespace krigrid
