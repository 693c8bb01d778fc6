#include "modred/freqresp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "modred/errors.hpp"
#include "modred/parallel.hpp"

namespace modred {

FrequencyGrid::FrequencyGrid(std::vector<double> omegas) : omegas_(std::move(omegas)) {
    if (omegas_.empty()) {
        throw DomainError("frequency grid must not be empty");
    }
    for (std::size_t i = 0; i < omegas_.size(); ++i) {
        const double w = omegas_[i];
        if (!std::isfinite(w) || w <= 0.0) {
            throw DomainError("frequency grid entries must be finite and > 0");
        }
        if (i > 0 && !(w > omegas_[i - 1])) {
            throw DomainError("frequency grid must be strictly increasing");
        }
    }
}

FrequencyGrid make_log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi) || n < 2) {
        throw DomainError("make_log_grid needs 0 < lo < hi and n >= 2");
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        w[i] = std::pow(10.0, a + t * (b - a));
    }
    w.front() = lo;
    w.back() = hi;
    return FrequencyGrid(std::move(w));
}

CMatrix NominalMatrix::full() const {
    CMatrix n(n11.rows() + n21.rows(), n11.cols() + n12.cols());
    n << n11, n12, n21, n22;
    return n;
}

NominalMatrix compute_N(const InterconnectedSystem& sys, const CMatrix& gb, double omega) {
    const auto pb = sys.pb();
    if (gb.rows() != pb || gb.cols() != sys.mb()) {
        throw DomainError("G_b response has the wrong shape for compute_N");
    }
    const CMatrix k11 = sys.k11().cast<Complex>();
    const CMatrix k12 = sys.k12().cast<Complex>();
    const CMatrix k21 = sys.k21().cast<Complex>();

    // One factorization of (I - G_b K11); N12 follows from the push-through
    // identity (I - K11 G_b)^{-1} = I + K11 (I - G_b K11)^{-1} G_b.
    CMatrix xinv = CMatrix::Identity(pb, pb);
    if (pb > 0) {
        const CMatrix x = CMatrix::Identity(pb, pb) - gb * k11;
        Eigen::PartialPivLU<CMatrix> lu(x);
        if (!(lu.rcond() > 1e-14)) {
            throw NumericalError("ill-posed at frequency omega = " + std::to_string(omega));
        }
        xinv = lu.inverse();
    }
    NominalMatrix n;
    n.omega = omega;
    n.n11 = k11 * xinv;
    n.n21 = k21 * xinv;
    n.n12 = k12 + n.n11 * (gb * k12);
    n.n22 = CMatrix::Zero(sys.pc(), sys.mc());
    return n;
}

NominalMatrix compute_N(const InterconnectedSystem& sys, double omega) {
    std::vector<CMatrix> blocks;
    blocks.reserve(sys.count());
    for (const auto& g : sys.subsystems()) blocks.push_back(freq_response(g, omega));
    return compute_N(sys, block_diag(blocks), omega);
}

double sigma_max(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 || m.cols() == 1) return m.norm();
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

ResponseSweep::ResponseSweep(const StateSpaceModel& model) : d_(model.d()) {
    if (model.states() == 0) {
        h_.resize(0, 0);
        b_.resize(0, model.inputs());
        c_.resize(model.outputs(), 0);
        return;
    }
    Eigen::HessenbergDecomposition<Matrix> hd(model.a());
    h_ = hd.matrixH();
    const Matrix q = hd.matrixQ();
    b_ = q.transpose() * model.b();
    c_ = model.c() * q;
}

CMatrix ResponseSweep::operator()(double omega) const {
    const auto n = h_.rows();
    CMatrix out = d_.cast<Complex>();
    if (n == 0) return out;

    CMatrix m = -h_.cast<Complex>();
    m.diagonal().array() += Complex(0.0, omega);
    CMatrix x = b_.cast<Complex>();
    const double scale = std::max(h_.cwiseAbs().maxCoeff(), std::abs(omega));
    const double tiny = std::numeric_limits<double>::epsilon() * 1e-2 * std::max(scale, 1e-300);

    // Gaussian elimination with pivoting between adjacent rows only.
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (std::abs(m(k + 1, k)) > std::abs(m(k, k))) {
            m.row(k).segment(k, n - k).swap(m.row(k + 1).segment(k, n - k));
            x.row(k).swap(x.row(k + 1));
        }
        const Complex pivot = m(k, k);
        if (std::abs(pivot) <= tiny) {
            throw NumericalError("frequency coincides with pole at omega = " +
                                 std::to_string(omega));
        }
        const Complex l = m(k + 1, k) / pivot;
        if (l != Complex(0.0)) {
            m.row(k + 1).segment(k + 1, n - k - 1) -= l * m.row(k).segment(k + 1, n - k - 1);
            x.row(k + 1) -= l * x.row(k);
        }
        m(k + 1, k) = 0.0;
    }
    if (std::abs(m(n - 1, n - 1)) <= tiny) {
        throw NumericalError("frequency coincides with pole at omega = " + std::to_string(omega));
    }
    m.triangularView<Eigen::Upper>().solveInPlace(x);
    out.noalias() += c_.cast<Complex>() * x;
    return out;
}

std::vector<CMatrix> sweep_response(const StateSpaceModel& model, const FrequencyGrid& grid,
                                    unsigned workers) {
    const ResponseSweep sweep(model);
    std::vector<CMatrix> out(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) { out[i] = sweep(grid[i]); });
    return out;
}

namespace {

double golden_max(const ResponseSweep& sweep, double lo, double hi, double refine_tol) {
    // Search in log(omega) on [lo, hi].
    constexpr double kInvPhi = 0.6180339887498949;
    double a = std::log(lo);
    double b = std::log(hi);
    auto f = [&](double t) { return sigma_max(sweep(std::exp(t))); };
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    double best = std::max(fc, fd);
    for (int it = 0; it < 200; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
        const double next = std::max({best, fc, fd});
        const bool settled = next - best <= refine_tol * std::max(next, 1e-300);
        best = next;
        if (settled && (b - a) < 1e-12 + refine_tol) break;
    }
    return best;
}

}  // namespace

double hinf_norm_estimate(const StateSpaceModel& model, const FrequencyGrid& grid,
                          double refine_tol) {
    if (!(refine_tol > 0.0)) {
        throw DomainError("refine_tol must be positive");
    }
    if (!stability_check(model).stable) {
        throw DomainError("hinf_norm_estimate needs a stable model");
    }
    const ResponseSweep sweep(model);
    double best = sigma_max(model.d().cast<Complex>());
    if (model.states() > 0) {
        best = std::max(best, sigma_max(freq_response(model, 0.0)));
    } else {
        return best;
    }

    const auto omegas = grid.omegas();
    const std::size_t n = omegas.size();
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = sigma_max(sweep(omegas[i]));
    best = std::max(best, *std::max_element(s.begin(), s.end()));

    // Local grid maxima, largest first; refine a few of them.
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i == 0 || s[i] >= s[i - 1];
        const bool right = i + 1 == n || s[i] >= s[i + 1];
        if (left && right) peaks.push_back(i);
    }
    std::sort(peaks.begin(), peaks.end(), [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });
    if (peaks.size() > 3) peaks.resize(3);
    for (const std::size_t i : peaks) {
        const double ratio = n > 1 ? omegas[1] / omegas[0] : 2.0;
        const double lo = i > 0 ? omegas[i - 1] : omegas[0] / ratio;
        const double hi = i + 1 < n ? omegas[i + 1] : omegas[n - 1] * ratio;
        best = std::max(best, golden_max(sweep, lo, hi, refine_tol));
    }
    return best;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
}

void write_csv(std::ostream& out, const FrequencyGrid& grid, std::span<const double> values,
               const std::string& value_name) {
    if (values.size() != grid.size()) {
        throw DomainError("write_csv: one value per grid point required");
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) rows.push_back({grid[i], values[i]});
    write_csv(out, {"omega", value_name}, rows);
}

}  // namespace modred
