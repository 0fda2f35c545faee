#include "variogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "error.hpp"

namespace krigrid {
namespace {

constexpr double kPi = 3.14159265358979323846;

double format_roundtrip(const char* key, const std::string& value) {
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || !std::isfinite(v))
        fail(ErrorCode::bad_format, std::string("bad numeric value for '") + key + "'");
    return v;
}

} // namespace

const char* to_string(VariogramKind kind) {
    switch (kind) {
    case VariogramKind::exponential: return "exponential";
    case VariogramKind::spherical: return "spherical";
    case VariogramKind::gaussian: return "gaussian";
    case VariogramKind::linear: return "linear";
    case VariogramKind::power: return "power";
    case VariogramKind::hole_effect: return "hole-effect";
    }
    return "exponential";
}

VariogramKind variogram_kind_from_string(const std::string& name) {
    if (name == "exponential") return VariogramKind::exponential;
    if (name == "spherical") return VariogramKind::spherical;
    if (name == "gaussian") return VariogramKind::gaussian;
    if (name == "linear") return VariogramKind::linear;
    if (name == "power") return VariogramKind::power;
    if (name == "hole-effect" || name == "hole_effect") return VariogramKind::hole_effect;
    fail(ErrorCode::invalid_argument, "unknown variogram kind '" + name + "'");
}

void VariogramModel::validate() const {
    require(std::isfinite(sill) && sill >= 0.0, ErrorCode::invalid_argument,
            "variogram sill must be >= 0");
    require(std::isfinite(nugget) && nugget >= 0.0, ErrorCode::invalid_argument,
            "variogram nugget must be >= 0");
    if (kind != VariogramKind::linear && kind != VariogramKind::power)
        require(std::isfinite(range) && range > 0.0, ErrorCode::invalid_argument,
                "variogram range must be > 0");
    if (kind == VariogramKind::power)
        require(std::isfinite(exponent) && exponent > 0.0 && exponent < 2.0,
                ErrorCode::invalid_argument, "power exponent must lie in (0,2)");
    if (kind == VariogramKind::linear)
        require(std::isfinite(slope) && slope >= 0.0, ErrorCode::invalid_argument,
                "linear slope must be >= 0");
}

double semivariance(const VariogramModel& model, double lag) {
    require(std::isfinite(lag) && lag >= 0.0, ErrorCode::invalid_argument,
            "semivariance lag must be >= 0");
    if (lag == 0.0)
        return 0.0; // gamma(0) = 0 by convention; nugget is the h->0+ limit
    switch (model.kind) {
    case VariogramKind::exponential:
        return model.nugget + model.sill * (1.0 - std::exp(-lag / model.range));
    case VariogramKind::spherical: {
        if (lag >= model.range)
            return model.nugget + model.sill;
        double t = lag / model.range;
        return model.nugget + model.sill * (1.5 * t - 0.5 * t * t * t);
    }
    case VariogramKind::gaussian: {
        double t = lag / model.range;
        return model.nugget + model.sill * (1.0 - std::exp(-t * t));
    }
    case VariogramKind::linear:
        return model.nugget + model.slope * lag;
    case VariogramKind::power:
        return model.nugget + model.sill * std::pow(lag, model.exponent);
    case VariogramKind::hole_effect: {
        double t = kPi * lag / model.range;
        return model.nugget + model.sill * (1.0 - std::sin(t) / t);
    }
    }
    fail(ErrorCode::invalid_argument, "unknown variogram kind");
}

std::vector<VariogramBin> empirical_variogram(const std::vector<SamplePoint>& samples,
                                              int n_lags) {
    require(samples.size() >= 2, ErrorCode::invalid_argument,
            "empirical variogram needs at least 2 samples");
    require(n_lags >= 1, ErrorCode::invalid_argument, "n_lags must be >= 1");

    double max_dist = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            double dx = samples[i].x - samples[j].x;
            double dy = samples[i].y - samples[j].y;
            max_dist = std::max(max_dist, std::hypot(dx, dy));
        }
    require(max_dist > 0.0, ErrorCode::degenerate, "all samples are co-located");

    std::vector<VariogramBin> bins(static_cast<std::size_t>(n_lags));
    double width = max_dist / n_lags;
    for (int i = 0; i < n_lags; ++i)
        bins[static_cast<std::size_t>(i)].lag_centre = (i + 0.5) * width;

    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            double dx = samples[i].x - samples[j].x;
            double dy = samples[i].y - samples[j].y;
            double d = std::hypot(dx, dy);
            auto bin = std::min(static_cast<std::size_t>(d / width),
                                static_cast<std::size_t>(n_lags - 1));
            double dv = samples[i].value - samples[j].value;
            bins[bin].semivariance += 0.5 * dv * dv;
            bins[bin].pair_count += 1;
        }
    for (auto& b : bins)
        if (b.pair_count > 0)
            b.semivariance /= static_cast<double>(b.pair_count);
    return bins;
}

namespace {

// Basis value so that gamma(h) = a + b * basis(h) for fixed shape parameters.
double fit_basis(VariogramKind kind, double shape, double lag) {
    switch (kind) {
    case VariogramKind::exponential:
        return 1.0 - std::exp(-lag / shape);
    case VariogramKind::spherical: {
        if (lag >= shape)
            return 1.0;
        double t = lag / shape;
        return 1.5 * t - 0.5 * t * t * t;
    }
    case VariogramKind::gaussian: {
        double t = lag / shape;
        return 1.0 - std::exp(-t * t);
    }
    case VariogramKind::linear:
        return lag;
    case VariogramKind::power:
        return std::pow(lag, shape);
    case VariogramKind::hole_effect: {
        double t = kPi * lag / shape;
        return 1.0 - std::sin(t) / t;
    }
    }
    return 0.0;
}

struct LinearFit {
    double nugget = 0.0;
    double scale = 0.0;
    double sse = std::numeric_limits<double>::infinity();
};

// Weighted least squares over gamma = nugget + scale * basis, with both
// coefficients clamped to be non-negative (refit on the boundary when the
// unconstrained optimum leaves the feasible region).
LinearFit solve_linear(const std::vector<VariogramBin>& bins, VariogramKind kind,
                       double shape) {
    double sw = 0, sb = 0, sbb = 0, sg = 0, sgb = 0, sgg = 0;
    for (const auto& bin : bins) {
        if (bin.pair_count == 0)
            continue;
        double w = static_cast<double>(bin.pair_count);
        double b = fit_basis(kind, shape, bin.lag_centre);
        double g = bin.semivariance;
        sw += w;
        sb += w * b;
        sbb += w * b * b;
        sg += w * g;
        sgb += w * g * b;
        sgg += w * g * g;
    }
    auto sse_at = [&](double a, double c) {
        // sum w (g - a - c b)^2 expanded via the accumulated moments
        return sgg + a * a * sw + c * c * sbb - 2 * a * sg - 2 * c * sgb + 2 * a * c * sb;
    };

    LinearFit best;
    double det = sw * sbb - sb * sb;
    if (std::abs(det) > 1e-12 * std::max(1.0, sw * sbb)) {
        double a = (sg * sbb - sgb * sb) / det;
        double c = (sw * sgb - sb * sg) / det;
        if (a >= 0.0 && c >= 0.0) {
            best = {a, c, sse_at(a, c)};
            return best;
        }
    }
    // Boundary candidates: nugget pinned to 0, or scale pinned to 0.
    if (sbb > 0) {
        double c = std::max(0.0, sgb / sbb);
        double sse = sse_at(0.0, c);
        if (sse < best.sse)
            best = {0.0, c, sse};
    }
    if (sw > 0) {
        double a = std::max(0.0, sg / sw);
        double sse = sse_at(a, 0.0);
        if (sse < best.sse)
            best = {a, 0.0, sse};
    }
    return best;
}

bool kind_has_shape(VariogramKind kind) {
    return kind != VariogramKind::linear;
}

std::pair<double, double> shape_bounds(VariogramKind kind, double max_lag) {
    if (kind == VariogramKind::power)
        return {0.05, 1.95};
    return {max_lag * 1e-2, max_lag * 2.0};
}

} // namespace

VariogramFit fit_variogram(const std::vector<SamplePoint>& samples, VariogramKind kind,
                           int n_lags) {
    require(samples.size() >= 3, ErrorCode::invalid_argument,
            "variogram fit needs at least 3 samples");
    auto bins = empirical_variogram(samples, n_lags);

    std::size_t usable = 0;
    double gamma_max = 0.0;
    double max_lag = 0.0;
    for (const auto& b : bins)
        if (b.pair_count > 0) {
            ++usable;
            gamma_max = std::max(gamma_max, b.semivariance);
            max_lag = std::max(max_lag, b.lag_centre);
        }

    VariogramFit fit;
    fit.model.kind = kind;
    fit.model.range = std::max(max_lag, 1.0);
    fit.model.exponent = 1.0;

    if (gamma_max <= 0.0 || usable < 2) {
        // Constant data (every pair difference 0) or too little lag structure
        // to constrain two coefficients.
        fit.degenerate = true;
        fit.model.sill = 0.0;
        fit.model.slope = 0.0;
        fit.model.nugget = 0.0;
        return fit;
    }

    auto apply = [&](const LinearFit& lin, double shape) {
        fit.model.nugget = lin.nugget;
        fit.objective = lin.sse;
        if (kind == VariogramKind::linear) {
            fit.model.slope = lin.scale;
            fit.model.sill = 0.0;
        } else if (kind == VariogramKind::power) {
            fit.model.sill = lin.scale;
            fit.model.exponent = shape;
        } else {
            fit.model.sill = lin.scale;
            fit.model.range = shape;
        }
    };

    if (!kind_has_shape(kind)) {
        apply(solve_linear(bins, kind, 0.0), 0.0);
        return fit;
    }

    auto [lo, hi] = shape_bounds(kind, max_lag);
    double best_shape = lo;
    double best_sse = std::numeric_limits<double>::infinity();
    LinearFit best_lin;

    // Coarse log grid over the shape parameter, then two rounds of local
    // refinement around the incumbent. Deterministic and derivative-free.
    auto scan = [&](double a, double b, int steps) {
        double la = std::log(a), lb = std::log(b);
        for (int i = 0; i <= steps; ++i) {
            double shape = std::exp(la + (lb - la) * i / steps);
            LinearFit lin = solve_linear(bins, kind, shape);
            if (lin.sse < best_sse) {
                best_sse = lin.sse;
                best_shape = shape;
                best_lin = lin;
            }
        }
    };
    scan(lo, hi, 48);
    for (int round = 0; round < 2; ++round) {
        double span = (round == 0) ? 1.35 : 1.06;
        double a = std::max(lo, best_shape / span);
        double b = std::min(hi, best_shape * span);
        scan(a, b, 24);
    }
    apply(best_lin, best_shape);

    // A flat optimum (everything explained by the nugget) means the shape
    // parameter is unidentifiable; report it rather than pretend convergence.
    if (kind != VariogramKind::power && fit.model.sill <= 0.0)
        fit.degenerate = true;
    fit.model.validate();
    return fit;
}

void write_variogram_text(const VariogramFit& fit, std::ostream& out) {
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "kind = " << to_string(fit.model.kind) << "\n";
    out << "sill = " << num(fit.model.sill) << "\n";
    out << "range = " << num(fit.model.range) << "\n";
    out << "nugget = " << num(fit.model.nugget) << "\n";
    out << "exponent = " << num(fit.model.exponent) << "\n";
    out << "slope = " << num(fit.model.slope) << "\n";
    out << "degenerate = " << (fit.degenerate ? "true" : "false") << "\n";
}

std::string variogram_to_text(const VariogramFit& fit) {
    std::ostringstream ss;
    write_variogram_text(fit, ss);
    return ss.str();
}

VariogramFit variogram_from_text(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    require(kv.count("kind") != 0, ErrorCode::bad_format, "variogram text missing 'kind'");
    VariogramFit fit;
    fit.model.kind = variogram_kind_from_string(kv["kind"]);
    auto get = [&kv](const char* key, double fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : format_roundtrip(key, it->second);
    };
    fit.model.sill = get("sill", 0.0);
    fit.model.range = get("range", 1.0);
    fit.model.nugget = get("nugget", 0.0);
    fit.model.exponent = get("exponent", 1.0);
    fit.model.slope = get("slope", 0.0);
    fit.degenerate = kv.count("degenerate") != 0 && kv["degenerate"] == "true";
    fit.model.validate();
    return fit;
}

VariogramFit variogram_from_text(const std::string& text) {
    std::istringstream ss(text);
    return variogram_from_text(ss);
}

} // namespace krigrid
