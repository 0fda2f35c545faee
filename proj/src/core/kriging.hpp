#pragma once

#include <Eigen/Dense>
#include <vector>

#include "types.hpp"
#include "variogram.hpp"

namespace krigrid {

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

struct QStats {
    double q1 = 0.0; // mean standardized sequential residual, ~0 when unbiased
    double q2 = 0.0; // mean squared residual, ~1 when the variance model is right
    double cr = 0.0; // q2 scaled by the geometric-mean prediction variance
};

// Ordinary kriging over scattered samples. The (n+1)x(n+1) Lagrange-bordered
// system is factorised once at construction; predictions reuse it. Duplicate
// sample locations are averaged into a single point before assembly.
class KrigingModel {
public:
    KrigingModel(std::vector<SamplePoint> samples, VariogramModel variogram);

    const std::vector<SamplePoint>& samples() const { return samples_; }
    const VariogramModel& variogram() const { return variogram_; }
    bool used_jitter() const { return used_jitter_; }

    // Mean and kriging variance at one query point. The mean comes from the
    // dual-weight form (one dot product), so it is bit-identical to what
    // render_field produces for the same location.
    Prediction predict(double x, double y) const;

    // Mean only; O(n) per query.
    double predict_mean(double x, double y) const;

    // Sequential leave-one-out statistics: sample i is predicted from samples
    // 1..i-1 in stored order, giving standardized residuals e_i.
    QStats cross_validate() const;

private:
    Eigen::VectorXd rhs_at(double x, double y) const;

    std::vector<SamplePoint> samples_;
    VariogramModel variogram_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    Eigen::VectorXd dual_; // A^-1 [values; 0]; mean(q) = dual . rhs(q)
    bool used_jitter_ = false;
};

// GP mean over a regular grid of cell centres spanning `extent`, clamped to
// [0,1]. `threads` <= 0 picks the hardware concurrency. The per-cell value is
// a pure function of the cell, so the thread count never changes the output.
ScalarField render_field(const KrigingModel& model, int width, int height,
                         const Extent& extent, int threads = 0);

} // namespace krigrid
