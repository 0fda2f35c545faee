#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "types.hpp"

namespace krigrid {

enum class VariogramKind {
    exponential,
    spherical,
    gaussian,
    linear,
    power,
    hole_effect,
};

const char* to_string(VariogramKind kind);
VariogramKind variogram_kind_from_string(const std::string& name);

// Semivariogram gamma(h). gamma(0) = 0 by convention; the nugget appears as the
// h -> 0+ discontinuity.
struct VariogramModel {
    VariogramKind kind = VariogramKind::exponential;
    double sill = 1.0;     // plateau variance (exp/sph/gauss/hole), scale for power
    double range = 1.0;    // lag scale; unused by linear and power
    double nugget = 0.0;
    double exponent = 1.0; // power kind only, in (0, 2)
    double slope = 0.0;    // linear kind only

    void validate() const;
};

double semivariance(const VariogramModel& model, double lag);

struct VariogramBin {
    double lag_centre = 0.0;
    double semivariance = 0.0; // mean of 0.5 * (v_i - v_j)^2 over pairs in the bin
    std::size_t pair_count = 0;
};

// Equal-width bins over [0, max pairwise distance]. Empty bins are kept with
// count 0 so the lag axis stays regular.
std::vector<VariogramBin> empirical_variogram(const std::vector<SamplePoint>& samples,
                                              int n_lags);

struct VariogramFit {
    VariogramModel model;
    bool degenerate = false; // constant data or too few usable bins
    double objective = 0.0;  // weighted SSE at the returned parameters
};

// Weighted least squares against the binned empirical variogram, weights =
// pair counts. Shape parameters (range or exponent) are found by grid search
// with local refinement; the linear (nugget, sill/slope) part is solved in
// closed form at each candidate.
VariogramFit fit_variogram(const std::vector<SamplePoint>& samples, VariogramKind kind,
                           int n_lags = 24);

// Key-value text block round-trip, e.g. "kind = exponential\nsill = ...".
void write_variogram_text(const VariogramFit& fit, std::ostream& out);
std::string variogram_to_text(const VariogramFit& fit);
VariogramFit variogram_from_text(std::istream& in);
VariogramFit variogram_from_text(const std::string& text);

} // namespace krigrid
