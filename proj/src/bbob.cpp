#include "geopas/bbob.hpp"

#include <cmath>

#include "geopas/common.hpp"

namespace geopas::bbob {

namespace {

// ---------------------------------------------------------------------------
// auxiliary BBOB transforms
// ---------------------------------------------------------------------------

double osz_scalar(double x) {
    if (x == 0.0) return 0.0;
    const double xhat = std::log(std::fabs(x));
    const double c1 = x > 0.0 ? 10.0 : 5.5;
    const double c2 = x > 0.0 ? 7.9 : 3.1;
    const double sign = x > 0.0 ? 1.0 : -1.0;
    return sign * std::exp(xhat + 0.049 * (std::sin(c1 * xhat) + std::sin(c2 * xhat)));
}

std::vector<double> osz(const std::vector<double>& z) {
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = osz_scalar(z[i]);
    return out;
}

std::vector<double> asy(const std::vector<double>& z, double beta) {
    const auto d = z.size();
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < d; ++i) {
        if (z[i] > 0.0) {
            const double expo =
                1.0 + beta * (d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0) *
                          std::sqrt(z[i]);
            out[i] = std::pow(z[i], expo);
        } else {
            out[i] = z[i];
        }
    }
    return out;
}

double lambda_coeff(std::size_t i, std::size_t d, double alpha) {
    if (d <= 1) return 1.0;
    return std::pow(alpha, 0.5 * static_cast<double>(i) / static_cast<double>(d - 1));
}

std::vector<double> lambda_scale(const std::vector<double>& z, double alpha) {
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = lambda_coeff(i, z.size(), alpha) * z[i];
    return out;
}

// boundary penalty on the physical point; zero inside the box
double boundary_penalty(const std::vector<double>& x, const Bounds& b) {
    double pen = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double below = b.lower[i] - x[i];
        const double above = x[i] - b.upper[i];
        if (below > 0.0) pen += below * below;
        if (above > 0.0) pen += above * above;
    }
    return pen;
}

double sum_sq(const std::vector<double>& z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return s;
}

// Gallagher-style peak set, derived deterministically from the instance seed.
// Peak 0 sits at z = 0 with the strictly largest weight, so the optimum stays
// at the shift.
struct PeakSet {
    std::vector<std::vector<double>> centres;
    std::vector<std::vector<double>> scales;
    std::vector<double> weights;
};

PeakSet make_peaks(int n_peaks, int dimension, std::uint64_t seed) {
    PeakSet peaks;
    Rng rng(seed);
    peaks.centres.resize(static_cast<std::size_t>(n_peaks));
    peaks.scales.resize(static_cast<std::size_t>(n_peaks));
    peaks.weights.resize(static_cast<std::size_t>(n_peaks));
    for (int p = 0; p < n_peaks; ++p) {
        auto& centre = peaks.centres[static_cast<std::size_t>(p)];
        auto& scale = peaks.scales[static_cast<std::size_t>(p)];
        centre.resize(static_cast<std::size_t>(dimension));
        scale.resize(static_cast<std::size_t>(dimension));
        const double condition = std::pow(1000.0, rng.next_double());
        for (int i = 0; i < dimension; ++i) {
            centre[static_cast<std::size_t>(i)] = p == 0 ? 0.0 : rng.next_uniform(-4.0, 4.0);
            scale[static_cast<std::size_t>(i)] =
                std::pow(condition, static_cast<double>(i) / std::max(1, dimension - 1)) /
                std::pow(condition, 0.25);
        }
        peaks.weights[static_cast<std::size_t>(p)] =
            p == 0 ? 10.0 : 1.1 + 8.0 * (static_cast<double>(p) - 1.0) /
                                      std::max(1.0, static_cast<double>(n_peaks) - 2.0);
    }
    return peaks;
}

double gallagher(const std::vector<double>& z, const PeakSet& peaks) {
    const auto d = static_cast<double>(z.size());
    double best = 0.0;
    for (std::size_t p = 0; p < peaks.weights.size(); ++p) {
        double quad = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double diff = z[i] - peaks.centres[p][i];
            quad += peaks.scales[p][i] * diff * diff;
        }
        best = std::max(best, peaks.weights[p] * std::exp(-quad / (2.0 * d)));
    }
    const double t = osz_scalar(10.0 - best);
    return t * t;
}

}  // namespace

Bounds Bounds::symmetric(int dimension, double half_width) {
    Bounds b;
    b.lower.assign(static_cast<std::size_t>(dimension), -half_width);
    b.upper.assign(static_cast<std::size_t>(dimension), half_width);
    return b;
}

bool is_separable(int function_id) { return function_id >= 1 && function_id <= 5; }

const char* function_name(int function_id) {
    static const char* names[kFunctionCount] = {
        "sphere",
        "ellipsoid_separable",
        "rastrigin_separable",
        "bueche_rastrigin",
        "slope_cone",
        "attractive_sector",
        "step_ellipsoid",
        "rosenbrock",
        "rosenbrock_rotated",
        "ellipsoid_rotated",
        "discus",
        "bent_cigar",
        "sharp_ridge",
        "different_powers",
        "rastrigin_rotated",
        "weierstrass",
        "schaffers_f7",
        "schaffers_f7_ill",
        "griewank_rosenbrock",
        "schwefel_wells",
        "gallagher_101",
        "gallagher_21",
        "katsuura",
        "lunacek_bi_rastrigin",
    };
    if (function_id < 1 || function_id > kFunctionCount)
        throw config_error("function_id out of range 1..24: " + std::to_string(function_id));
    return names[function_id - 1];
}

int function_group(int function_id) {
    if (function_id <= 5) return 0;
    if (function_id <= 9) return 1;
    if (function_id <= 14) return 2;
    if (function_id <= 19) return 3;
    return 4;
}

const char* group_label(int group_index) {
    static const char* labels[kGroupCount] = {"f1-f5", "f6-f9", "f10-f14", "f15-f19", "f20-f24"};
    return labels[group_index];
}

// Full-rank Haar draw via modified Gram-Schmidt, the same orthonormalisation
// the probing module uses at width 2.
static std::vector<double> haar_rotation(int dimension, Rng& rng) {
    const auto d = static_cast<std::size_t>(dimension);
    std::vector<double> m(d * d);
    while (true) {
        for (auto& v : m) v = rng.next_gaussian();
        bool ok = true;
        // orthonormalise columns in place
        for (std::size_t col = 0; col < d && ok; ++col) {
            for (std::size_t prev = 0; prev < col; ++prev) {
                double dot = 0.0;
                for (std::size_t row = 0; row < d; ++row) dot += m[row * d + col] * m[row * d + prev];
                for (std::size_t row = 0; row < d; ++row) m[row * d + col] -= dot * m[row * d + prev];
            }
            double norm = 0.0;
            for (std::size_t row = 0; row < d; ++row) norm += m[row * d + col] * m[row * d + col];
            norm = std::sqrt(norm);
            if (norm < 1e-12) {
                ok = false;
                break;
            }
            for (std::size_t row = 0; row < d; ++row) m[row * d + col] /= norm;
        }
        if (ok) return m;
    }
}

ProblemInstance make_instance(int function_id, int dimension, int instance_id) {
    if (function_id < 1 || function_id > kFunctionCount)
        throw config_error("function_id out of range 1..24: " + std::to_string(function_id));
    if (dimension < 2) throw config_error("dimension must be >= 2");
    if (instance_id < 1) throw config_error("instance_id must be >= 1");

    ProblemInstance inst;
    inst.function_id = function_id;
    inst.dimension = dimension;
    inst.instance_id = instance_id;
    inst.bounds = Bounds::symmetric(dimension);

    const std::uint64_t seed =
        derive_seed(0x67656f706173ULL, static_cast<std::uint64_t>(function_id),
                    static_cast<std::uint64_t>(dimension), static_cast<std::uint64_t>(instance_id));
    Rng rng(seed);

    Rng shift_rng = rng.split(1);
    inst.shift.resize(static_cast<std::size_t>(dimension));
    for (int i = 0; i < dimension; ++i) {
        const double lo = inst.bounds.lower[static_cast<std::size_t>(i)];
        const double hi = inst.bounds.upper[static_cast<std::size_t>(i)];
        const double width = hi - lo;
        // inner 80% of the box
        inst.shift[static_cast<std::size_t>(i)] =
            lo + 0.1 * width + 0.8 * width * shift_rng.next_double();
    }

    Rng rot_rng = rng.split(2);
    if (is_separable(function_id)) {
        inst.rotation.assign(static_cast<std::size_t>(dimension * dimension), 0.0);
        for (int i = 0; i < dimension; ++i)
            inst.rotation[static_cast<std::size_t>(i * dimension + i)] = 1.0;
    } else {
        inst.rotation = haar_rotation(dimension, rot_rng);
    }

    Rng fopt_rng = rng.split(3);
    inst.f_opt = fopt_rng.next_uniform(-100.0, 100.0);
    return inst;
}

std::vector<double> to_physical(const std::vector<double>& unit_point, const Bounds& bounds) {
    std::vector<double> out(unit_point.size());
    for (std::size_t i = 0; i < unit_point.size(); ++i)
        out[i] = bounds.lower[i] + unit_point[i] * (bounds.upper[i] - bounds.lower[i]);
    return out;
}

double ProblemInstance::evaluate(const std::vector<double>& point) const {
    const auto d = static_cast<std::size_t>(dimension);
    if (point.size() != d)
        throw input_error("evaluate: point has length " + std::to_string(point.size()) +
                          ", expected " + std::to_string(dimension));

    // z = R (x - shift); f8 keeps the published translation-only form
    std::vector<double> diff(d);
    for (std::size_t i = 0; i < d; ++i) diff[i] = point[i] - shift[i];
    std::vector<double> z(d, 0.0);
    if (is_separable(function_id) || function_id == 8) {
        z = diff;
    } else {
        for (std::size_t r = 0; r < d; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += rotation[r * d + c] * diff[c];
            z[r] = acc;
        }
    }

    const double dd = static_cast<double>(d);
    double g = 0.0;

    switch (function_id) {
        case 1: {  // sphere
            g = sum_sq(z);
            break;
        }
        case 2: {  // separable ellipsoid, condition 1e6
            const auto t = osz(z);
            for (std::size_t i = 0; i < d; ++i)
                g += std::pow(10.0, 6.0 * static_cast<double>(i) / static_cast<double>(d - 1)) *
                     t[i] * t[i];
            break;
        }
        case 3: {  // separable Rastrigin
            const auto zh = lambda_scale(asy(osz(z), 0.2), 10.0);
            double cos_sum = 0.0;
            for (double v : zh) cos_sum += std::cos(2.0 * M_PI * v);
            g = 10.0 * (dd - cos_sum) + sum_sq(zh);
            break;
        }
        case 4: {  // Bueche-Rastrigin
            const auto t = osz(z);
            std::vector<double> zh(d);
            for (std::size_t i = 0; i < d; ++i) {
                double s = std::pow(10.0, 0.5 * static_cast<double>(i) / static_cast<double>(d - 1));
                if (i % 2 == 0 && t[i] > 0.0) s *= 10.0;
                zh[i] = s * t[i];
            }
            double cos_sum = 0.0;
            for (double v : zh) cos_sum += std::cos(2.0 * M_PI * v);
            g = 10.0 * (dd - cos_sum) + sum_sq(zh) + 100.0 * boundary_penalty(point, bounds);
            break;
        }
        case 5: {  // weighted cone; interior optimum in place of the BBOB boundary slope
            for (std::size_t i = 0; i < d; ++i)
                g += std::pow(10.0, static_cast<double>(i) / static_cast<double>(d - 1)) *
                     std::fabs(z[i]);
            break;
        }
        case 6: {  // attractive sector
            const auto zh = lambda_scale(z, 10.0);
            double q = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double h = zh[i] * shift[i] > 0.0 ? 100.0 : 1.0;
                q += h * zh[i] * h * zh[i];
            }
            g = std::pow(osz_scalar(q), 0.9);
            break;
        }
        case 7: {  // step ellipsoid
            const auto zh = lambda_scale(z, 10.0);
            std::vector<double> zt(d);
            for (std::size_t i = 0; i < d; ++i)
                zt[i] = std::fabs(zh[i]) > 0.5 ? std::round(zh[i]) : std::round(10.0 * zh[i]) / 10.0;
            double q = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                q += std::pow(10.0, 2.0 * static_cast<double>(i) / static_cast<double>(d - 1)) *
                     zt[i] * zt[i];
            g = 0.1 * std::max(std::fabs(zh[0]) / 1e4, q);
            break;
        }
        case 8:
        case 9: {  // Rosenbrock (original / rotated)
            const double c = std::max(1.0, std::sqrt(dd) / 8.0);
            std::vector<double> zr(d);
            for (std::size_t i = 0; i < d; ++i) zr[i] = c * z[i] + 1.0;
            for (std::size_t i = 0; i + 1 < d; ++i) {
                const double a = zr[i] * zr[i] - zr[i + 1];
                const double b = zr[i] - 1.0;
                g += 100.0 * a * a + b * b;
            }
            break;
        }
        case 10: {  // rotated ellipsoid
            const auto t = osz(z);
            for (std::size_t i = 0; i < d; ++i)
                g += std::pow(10.0, 6.0 * static_cast<double>(i) / static_cast<double>(d - 1)) *
                     t[i] * t[i];
            break;
        }
        case 11: {  // discus
            const auto t = osz(z);
            g = 1e6 * t[0] * t[0];
            for (std::size_t i = 1; i < d; ++i) g += t[i] * t[i];
            break;
        }
        case 12: {  // bent cigar
            const auto t = asy(z, 0.5);
            g = t[0] * t[0];
            for (std::size_t i = 1; i < d; ++i) g += 1e6 * t[i] * t[i];
            break;
        }
        case 13: {  // sharp ridge
            const auto zh = lambda_scale(z, 10.0);
            double tail = 0.0;
            for (std::size_t i = 1; i < d; ++i) tail += zh[i] * zh[i];
            g = zh[0] * zh[0] + 100.0 * std::sqrt(tail);
            break;
        }
        case 14: {  // different powers
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                s += std::pow(std::fabs(z[i]),
                              2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(d - 1));
            g = std::sqrt(s);
            break;
        }
        case 15: {  // rotated Rastrigin
            const auto zh = lambda_scale(asy(osz(z), 0.2), 10.0);
            double cos_sum = 0.0;
            for (double v : zh) cos_sum += std::cos(2.0 * M_PI * v);
            g = 10.0 * (dd - cos_sum) + sum_sq(zh);
            break;
        }
        case 16: {  // Weierstrass
            const auto zh = lambda_scale(osz(z), 0.01);
            double f0 = 0.0;
            for (int k = 0; k <= 11; ++k)
                f0 += std::pow(0.5, k) * std::cos(M_PI * std::pow(3.0, k));
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                for (int k = 0; k <= 11; ++k)
                    s += std::pow(0.5, k) * std::cos(2.0 * M_PI * std::pow(3.0, k) * (zh[i] + 0.5));
            const double core = s / dd - f0;
            g = 10.0 * core * core * core + (10.0 / dd) * boundary_penalty(point, bounds);
            break;
        }
        case 17:
        case 18: {  // Schaffers F7 (moderate / ill-conditioned)
            const double alpha = function_id == 17 ? 10.0 : 1000.0;
            const auto zh = lambda_scale(asy(z, 0.5), alpha);
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < d; ++i) {
                const double si = std::sqrt(zh[i] * zh[i] + zh[i + 1] * zh[i + 1]);
                const double sin_term = std::sin(50.0 * std::pow(si, 0.2));
                s += std::sqrt(si) + std::sqrt(si) * sin_term * sin_term;
            }
            s /= static_cast<double>(d - 1);
            g = s * s + 10.0 * boundary_penalty(point, bounds);
            break;
        }
        case 19: {  // composite Griewank-Rosenbrock
            const double c = std::max(1.0, std::sqrt(dd) / 8.0);
            std::vector<double> zr(d);
            for (std::size_t i = 0; i < d; ++i) zr[i] = c * z[i] + 1.0;
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < d; ++i) {
                const double a = zr[i] * zr[i] - zr[i + 1];
                const double b = zr[i] - 1.0;
                const double si = 100.0 * a * a + b * b;
                s += si / 4000.0 - std::cos(si);
            }
            g = (10.0 / (dd - 1.0)) * s + 10.0;
            break;
        }
        case 20: {  // Schwefel-style sine wells, recentred so the optimum is at the shift
            const double y_opt = 420.9687462275036;
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double y = y_opt - 83.0 * std::fabs(z[i]);
                s += 418.9828872724339 - y * std::sin(std::sqrt(std::fabs(y)));
            }
            g = s / (100.0 * dd) * 10.0 + 100.0 * boundary_penalty(point, bounds);
            break;
        }
        case 21:
        case 22: {  // Gallagher peaks (101 / 21)
            const int n_peaks = function_id == 21 ? 101 : 21;
            const std::uint64_t peak_seed = derive_seed(
                0x70656b73ULL, static_cast<std::uint64_t>(function_id),
                static_cast<std::uint64_t>(dimension), static_cast<std::uint64_t>(instance_id));
            const PeakSet peaks = make_peaks(n_peaks, dimension, peak_seed);
            g = gallagher(z, peaks) + boundary_penalty(point, bounds);
            break;
        }
        case 23: {  // Katsuura
            const auto zh = lambda_scale(z, 100.0);
            double prod = 1.0;
            for (std::size_t i = 0; i < d; ++i) {
                double s = 0.0;
                for (int j = 1; j <= 32; ++j) {
                    const double t = std::pow(2.0, j) * zh[i];
                    s += std::fabs(t - std::round(t)) / std::pow(2.0, j);
                }
                prod *= std::pow(1.0 + (static_cast<double>(i) + 1.0) * s, 10.0 / std::pow(dd, 1.2));
            }
            g = (10.0 / (dd * dd)) * (prod - 1.0) + boundary_penalty(point, bounds);
            break;
        }
        case 24: {  // Lunacek bi-Rastrigin
            const double mu0 = 2.5;
            const double s_coef = 1.0 - 1.0 / (2.0 * std::sqrt(dd + 20.0) - 8.2);
            const double mu1 = -std::sqrt((mu0 * mu0 - 1.0) / s_coef);
            double quad0 = 0.0, quad1 = 0.0, cos_sum = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double y = z[i] + mu0;
                quad0 += (y - mu0) * (y - mu0);
                quad1 += (y - mu1) * (y - mu1);
                cos_sum += std::cos(2.0 * M_PI * (y - mu0));
            }
            g = std::min(quad0, dd + s_coef * quad1) + 10.0 * (dd - cos_sum) +
                100.0 * boundary_penalty(point, bounds);
            break;
        }
        default:
            throw config_error("function_id out of range 1..24");
    }

    return g + f_opt;
}

}  // namespace geopas::bbob
