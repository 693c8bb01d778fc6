#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "modred/reduction.hpp"

namespace modred {

namespace {

// Parameter vector: [log K, {log wz, log zz, log wp, log zp} per second-order
// section, {log z, log p} for the optional first-order section]. Frequencies
// and damping ratios are clamped to a box so the fit cannot wander off to
// degenerate poles.
struct Layout {
    int second = 0;
    bool first = false;

    [[nodiscard]] Eigen::Index size() const { return 1 + 4 * second + (first ? 2 : 0); }
};

struct Box {
    double log_w_lo, log_w_hi;
    static constexpr double log_zeta_lo = -6.907755278982137;  // ln 1e-3
    static constexpr double log_zeta_hi = 6.907755278982137;
};

// Underestimating an inverse budget hides a tight frequency from the
// weighted reduction, so those residuals count more.
double shaped(double r) { return r < 0.0 ? kUnderfitPenalty * r : r; }

double clamp_w(double x, const Box& box) { return std::exp(std::clamp(x, box.log_w_lo, box.log_w_hi)); }
double clamp_z(double x) { return std::exp(std::clamp(x, Box::log_zeta_lo, Box::log_zeta_hi)); }

double log_mag(const Vector& th, const Layout& lay, const Box& box, double w) {
    double acc = th(0);
    Eigen::Index k = 1;
    for (int s = 0; s < lay.second; ++s, k += 4) {
        const double wz = clamp_w(th(k), box), zz = clamp_z(th(k + 1));
        const double wp = clamp_w(th(k + 2), box), zp = clamp_z(th(k + 3));
        acc += 0.5 * std::log(std::pow(wz * wz - w * w, 2) + std::pow(2.0 * zz * wz * w, 2));
        acc -= 0.5 * std::log(std::pow(wp * wp - w * w, 2) + std::pow(2.0 * zp * wp * w, 2));
    }
    if (lay.first) {
        const double z = clamp_w(th(k), box), p = clamp_w(th(k + 1), box);
        acc += 0.5 * std::log(z * z + w * w) - 0.5 * std::log(p * p + w * w);
    }
    return acc;
}

struct Residual {
    using Scalar = double;
    using InputType = Vector;
    using ValueType = Vector;
    using JacobianType = Matrix;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const std::vector<double>* omegas;
    const std::vector<double>* targets;  // log samples
    Layout lay;
    Box box;
    Vector anchor;      // regularization keeps the problem overdetermined
    Eigen::Index free_from = 0;  // parameters before this index are frozen
    Vector frozen;

    [[nodiscard]] int inputs() const { return static_cast<int>(lay.size() - free_from); }
    [[nodiscard]] int values() const { return static_cast<int>(omegas->size()) + inputs(); }

    [[nodiscard]] Vector full(const Vector& x) const {
        Vector th = frozen;
        th.tail(lay.size() - free_from) = x;
        return th;
    }

    int operator()(const Vector& x, Vector& f) const {
        const Vector th = full(x);
        const auto n = static_cast<Eigen::Index>(omegas->size());
        f.resize(values());
        for (Eigen::Index i = 0; i < n; ++i) {
            f(i) = shaped(log_mag(th, lay, box, (*omegas)[static_cast<std::size_t>(i)]) -
                          (*targets)[static_cast<std::size_t>(i)]);
        }
        f.tail(inputs()) = 1e-4 * (x - anchor);
        return 0;
    }
};

double sse(const Vector& th, const Layout& lay, const Box& box, const std::vector<double>& om,
           const std::vector<double>& tg) {
    double s = 0.0;
    for (std::size_t i = 0; i < om.size(); ++i) s += std::pow(shaped(log_mag(th, lay, box, om[i]) - tg[i]), 2);
    return s;
}

Vector refine(const Vector& th0, const Layout& lay, const Box& box, const std::vector<double>& om,
              const std::vector<double>& tg, Eigen::Index free_from, int max_fev) {
    Residual r{&om, &tg, lay, box, th0.tail(lay.size() - free_from), free_from, th0};
    Eigen::NumericalDiff<Residual> nd(r);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Residual>> lm(nd);
    lm.parameters.maxfev = max_fev;
    lm.parameters.xtol = 1e-10;
    lm.parameters.ftol = 1e-12;
    Vector x = th0.tail(lay.size() - free_from);
    lm.minimize(x);
    Vector th = r.full(x);
    if (!th.allFinite() || sse(th, lay, box, om, tg) > sse(th0, lay, box, om, tg)) return th0;
    return th;
}

StateSpaceModel series(const StateSpaceModel& first, const StateSpaceModel& second) {
    const auto n1 = first.states(), n2 = second.states();
    Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
    a.topLeftCorner(n1, n1) = first.a();
    a.bottomLeftCorner(n2, n1) = second.b() * first.c();
    a.bottomRightCorner(n2, n2) = second.a();
    Matrix b(n1 + n2, first.inputs());
    b << first.b(), second.b() * first.d();
    Matrix c(second.outputs(), n1 + n2);
    c << second.d() * first.c(), second.c();
    return {a, b, c, second.d() * first.d()};
}

StateSpaceModel realize(const Vector& th, const Layout& lay, const Box& box) {
    StateSpaceModel h = StateSpaceModel::static_gain(Matrix::Constant(1, 1, std::exp(th(0))));
    Eigen::Index k = 1;
    for (int s = 0; s < lay.second; ++s, k += 4) {
        const double wz = clamp_w(th(k), box), zz = clamp_z(th(k + 1));
        const double wp = clamp_w(th(k + 2), box), zp = clamp_z(th(k + 3));
        // 1 + ((a1 - b1) s + (a0 - b0)) / (s^2 + b1 s + b0), states scaled by wp.
        const double a1 = 2.0 * zz * wz, a0 = wz * wz, b1 = 2.0 * zp * wp, b0 = wp * wp;
        Matrix a(2, 2);
        a << 0.0, wp, -wp, -b1;
        Matrix b(2, 1);
        b << 0.0, 1.0;
        Matrix c(1, 2);
        c << (a0 - b0) / wp, a1 - b1;
        h = series(h, StateSpaceModel(a, b, c, Matrix::Ones(1, 1)));
    }
    if (lay.first) {
        const double z = clamp_w(th(k), box), p = clamp_w(th(k + 1), box);
        h = series(h, StateSpaceModel(Matrix::Constant(1, 1, -p), Matrix::Ones(1, 1),
                                      Matrix::Constant(1, 1, z - p), Matrix::Ones(1, 1)));
    }
    return h;
}

}  // namespace

CVector FittedWeight::poles() const {
    if (model.states() == 0) return CVector(0);
    return Eigen::EigenSolver<Matrix>(model.a(), false).eigenvalues();
}

CVector FittedWeight::zeros() const {
    if (model.states() == 0) return CVector(0);
    const Matrix az = model.a() - model.b() * model.c() / model.d()(0, 0);
    return Eigen::EigenSolver<Matrix>(az, false).eigenvalues();
}

FittedWeight fit_weight(const FrequencyGrid& grid, std::span<const double> samples, int order) {
    if (samples.size() != grid.size()) throw DomainError("one weight sample per grid point is required");
    if (order < 0) throw DomainError("weight order must be nonnegative");
    std::vector<double> om(grid.omegas().begin(), grid.omegas().end());
    std::vector<double> tg(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i] > 0.0) || !std::isfinite(samples[i])) {
            throw DomainError("weight samples must be positive and finite");
        }
        tg[i] = std::log(samples[i]);
    }
    const Box box{std::log(grid.front()) - std::log(1e3), std::log(grid.back()) + std::log(1e3)};

    Layout lay{0, false};
    Vector th(1);
    th(0) = std::accumulate(tg.begin(), tg.end(), 0.0) / static_cast<double>(tg.size());

    const int n_second = order / 2;
    const bool odd = order % 2 == 1;
    const double lo = std::log(grid.front()), hi = std::log(grid.back());
    for (int step = 0; step < n_second + (odd ? 1 : 0); ++step) {
        const bool second = step < n_second;
        Layout next = lay;
        if (second) {
            ++next.second;
        } else {
            next.first = true;
        }
        // Candidate centres: spread over the band plus the worst residual.
        std::vector<double> centres;
        constexpr int spread = 8;
        for (int i = 0; i < spread; ++i) centres.push_back(lo + (hi - lo) * (i + 0.5) / spread);
        {
            std::size_t worst = 0;
            double worst_val = -1.0;
            for (std::size_t i = 0; i < om.size(); ++i) {
                const double r = std::abs(log_mag(th, lay, box, om[i]) - tg[i]);
                if (r > worst_val) {
                    worst_val = r;
                    worst = i;
                }
            }
            centres.push_back(std::log(om[worst]));
        }
        struct Shape {
            double dz, zz, dp, zp;
        };
        // Offsets in log frequency and damping ratios of zeros/poles. The first
        // shape cancels, so the objective cannot grow with the order.
        const std::vector<Shape> shapes =
            second ? std::vector<Shape>{{0.0, 0.7, 0.0, 0.7},
                                        {0.0, 1.0, 0.0, 0.1},
                                        {0.0, 0.1, 0.0, 1.0},
                                        {-0.7, 0.7, 0.7, 0.7},
                                        {0.7, 0.7, -0.7, 0.7}}
                   : std::vector<Shape>{{0.0, 0, 0.0, 0}, {-0.7, 0, 0.7, 0}, {0.7, 0, -0.7, 0}};

        Vector best;
        double best_sse = std::numeric_limits<double>::infinity();
        for (double c : centres) {
            for (const auto& sh : shapes) {
                Vector cand(next.size());
                // Insert the new section in layout order: second-order sections precede the first-order one.
                cand(0) = th(0);
                Eigen::Index k = 1;
                for (int s = 0; s < lay.second; ++s, k += 4) cand.segment(k, 4) = th.segment(k, 4);
                Eigen::Index new_at = k;
                if (second) {
                    cand.segment(k, 4) << c + sh.dz, std::log(sh.zz), c + sh.dp, std::log(sh.zp);
                } else {
                    cand.segment(k, 2) << c + sh.dz, c + sh.dp;
                }
                const Vector moved = refine(cand, next, box, om, tg, new_at, 60 * (next.size() + 1));
                const double s = sse(moved, next, box, om, tg);
                if (s < best_sse) {
                    best_sse = s;
                    best = moved;
                }
            }
        }
        lay = next;
        th = refine(best, lay, box, om, tg, 0, 200 * (lay.size() + 1));
    }

    FittedWeight out{realize(th, lay, box), 0.0};
    for (std::size_t i = 0; i < om.size(); ++i) {
        out.fit_error = std::max(out.fit_error, std::abs(std::exp(log_mag(th, lay, box, om[i]) - tg[i]) - 1.0));
    }
    return out;
}

StateSpaceModel diagonal_weight(std::span<const FittedWeight> channels) {
    if (channels.empty()) throw DomainError("diagonal_weight needs at least one channel");
    std::vector<StateSpaceModel> models;
    models.reserve(channels.size());
    for (const auto& c : channels) models.push_back(c.model);
    return block_diag(models);
}

}  // namespace modred
