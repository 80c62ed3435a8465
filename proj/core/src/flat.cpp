#include <geolp/error.hpp>
#include <geolp/fit.hpp>
#include <geolp/flat.hpp>

#include "stencil.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

namespace geolp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

bool power_of_two(int n)
{
    return n >= 8 && (n & (n - 1)) == 0;
}

int log2_int(int n)
{
    int l = 0;
    while ((1 << (l + 1)) <= n) ++l;
    return l;
}

/// Planning is not thread-safe in FFTW; plans are built once per n under a lock and
/// executed through the new-array interface, which is.
struct Plans
{
    fftw_plan forward;
    fftw_plan backward;
};

const Plans& plans(int n)
{
    static std::mutex mutex;
    static std::map<int, Plans> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const std::size_t half = std::size_t(n) * (n / 2 + 1);
    double* real = fftw_alloc_real(std::size_t(n) * n);
    fftw_complex* spec = fftw_alloc_complex(half);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p{fftw_plan_dft_r2c_2d(n, n, real, spec, flags), fftw_plan_dft_c2r_2d(n, n, spec, real, flags)};
    fftw_free(real);
    fftw_free(spec);
    return cache.emplace(n, p).first->second;
}

/// Half spectrum X[k2·(n/2+1) + k1], unnormalized.
Spectrum forward(int n, const double* in)
{
    Spectrum out(std::size_t(n) * (n / 2 + 1));
    fftw_execute_dft_r2c(plans(n).forward, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

/// Inverse of forward(); consumes the spectrum.
void backward(int n, Spectrum& s, double* out)
{
    fftw_execute_dft_c2r(plans(n).backward, reinterpret_cast<fftw_complex*>(s.data()), out);
    const double scale = 1.0 / (double(n) * n);
    for (Index i = 0; i < Index(n) * n; ++i) out[i] *= scale;
}

int signed_frequency(int k, int n)
{
    return k <= n / 2 ? k : k - n;
}

/// Parseval multiplicity of a half-spectrum column.
double parseval_weight(int k1, int n)
{
    return (k1 == 0 || k1 == n / 2) ? 1.0 : 2.0;
}

template <class F>
void for_each_mode(int n, F&& f)
{
    const int h = n / 2 + 1;
    for (int k2 = 0; k2 < n; ++k2) {
        const int xi2 = signed_frequency(k2, n);
        for (int k1 = 0; k1 < h; ++k1) f(std::size_t(k2) * h + k1, k1, xi2);
    }
}

/// ‖P_{<0}f(t_j)‖ in row 0 and ‖P_k f(t_j)‖ in row k+1, k = 0..top, by Parseval.
MatrixXd band_norms(const FlatField& f, int top)
{
    const int n = f.n();
    const std::size_t size = std::size_t(n) * (n / 2 + 1);
    // symbols(b, idx): squared multiplier of band b times the Parseval weight.
    MatrixXd symbols = MatrixXd::Zero(top + 2, Index(size));
    for_each_mode(n, [&](std::size_t idx, int k1, int xi2) {
        const double r = std::hypot(double(k1), double(xi2));
        const double w = parseval_weight(k1, n);
        symbols(0, Index(idx)) = w * flat_cutoff(2.0 * r) * flat_cutoff(2.0 * r);
        for (int k = 0; k <= top; ++k) {
            const double m = flat_bump(std::ldexp(r, -k));
            symbols(k + 1, Index(idx)) = w * m * m;
        }
    });
    VectorXd power = VectorXd::Zero(Index(size));
    MatrixXd out(top + 2, f.n_t());
    for (int j = 0; j < f.n_t(); ++j) {
        const Spectrum s = forward(n, f.values().col(j).data());
        for (std::size_t idx = 0; idx < size; ++idx) power[Index(idx)] = std::norm(s[idx]);
        out.col(j) = symbols * power;
    }
    return (out * (f.cell() / (double(n) * n))).cwiseSqrt();
}

std::vector<double> trapezoid_weights(int n_t)
{
    if (n_t == 1) return {1.0};
    const double h = 1.0 / (n_t - 1);
    std::vector<double> w(n_t, h);
    w.front() = w.back() = 0.5 * h;
    return w;
}

double lq(const std::vector<double>& w, const double* a, int m, Index stride, double q)
{
    if (std::isinf(q)) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s = std::max(s, std::abs(a[j * stride]));
        return s;
    }
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += w[j] * std::pow(std::abs(a[j * stride]), q);
    return std::pow(s, 1.0 / q);
}

double l2_space_time(const FlatField& f)
{
    const auto w = trapezoid_weights(f.n_t());
    double s = 0.0;
    for (int j = 0; j < f.n_t(); ++j) s += w[j] * f.values().col(j).squaredNorm();
    return s * f.cell();
}

void require_product_safe(const FlatField& a, const FlatField& b, const char* what)
{
    if (flat_frequency_extent(a) + flat_frequency_extent(b) >= a.n() / 2) {
        throw DomainError(std::string(what) + ": product would alias on the " + std::to_string(a.n()) + " grid");
    }
}

double time_bump(double t)
{
    return std::sin(std::numbers::pi * t);
}

} // namespace

FlatField::FlatField(int n, int n_t)
    : FlatField(n, MatrixXd::Zero(Index(n) * n, n_t))
{}

FlatField::FlatField(int n, MatrixXd values)
    : n_(n)
    , values_(std::move(values))
{
    if (!power_of_two(n)) throw DomainError("flat grid size must be a power of two >= 8");
    if (values_.rows() != Index(n) * n || values_.cols() < 1) throw DomainError("flat field shape mismatch");
}

FlatField FlatField::from_function(int n, int n_t, const std::function<double(double, double, double)>& f)
{
    FlatField out(n, n_t);
    for (int j = 0; j < n_t; ++j) {
        for (int i2 = 0; i2 < n; ++i2) {
            for (int i1 = 0; i1 < n; ++i1) out.values_(i1 + Index(n) * i2, j) = f(out.t(j), out.x(i1), out.x(i2));
        }
    }
    return out;
}

double FlatField::x(int i) const
{
    return two_pi * i / n_;
}

double FlatField::t(int j) const
{
    return n_t() == 1 ? 0.0 : double(j) / (n_t() - 1);
}

double FlatField::dt() const
{
    return n_t() == 1 ? 0.0 : 1.0 / (n_t() - 1);
}

double FlatField::cell() const
{
    const double h = two_pi / n_;
    return h * h;
}

FlatField FlatField::slice(int j) const
{
    return FlatField(n_, MatrixXd(values_.col(j)));
}

FlatField& FlatField::operator+=(const FlatField& o)
{
    values_ += o.values_;
    return *this;
}

FlatField& FlatField::operator-=(const FlatField& o)
{
    values_ -= o.values_;
    return *this;
}

FlatField& FlatField::operator*=(double c)
{
    values_ *= c;
    return *this;
}

FlatField pointwise(const FlatField& a, const FlatField& b)
{
    if (a.n() != b.n() || a.n_t() != b.n_t()) throw DomainError("pointwise product of mismatched fields");
    return FlatField(a.n(), a.values().cwiseProduct(b.values()));
}

double flat_cutoff(double r)
{
    const double x = r - 1.0;
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return b / (a + b);
}

double flat_bump(double r)
{
    return flat_cutoff(r) - flat_cutoff(2.0 * r);
}

int flat_max_band(int n)
{
    return log2_int(n) - 2;
}

int flat_product_band(int n)
{
    return log2_int(n) - 3;
}

int flat_top_band(int n)
{
    const double rmax = std::sqrt(2.0) * (n / 2);
    int k = 0;
    while (std::ldexp(1.0, k) < rmax) ++k;
    return k;
}

FlatField apply_symbol(const FlatField& f, const std::function<double(int, int)>& symbol)
{
    const int n = f.n();
    std::vector<double> m(std::size_t(n) * (n / 2 + 1));
    for_each_mode(n, [&](std::size_t idx, int k1, int xi2) { m[idx] = symbol(k1, xi2); });
    FlatField out(n, f.n_t());
    for (int j = 0; j < f.n_t(); ++j) {
        Spectrum s = forward(n, f.values().col(j).data());
        for (std::size_t idx = 0; idx < s.size(); ++idx) s[idx] *= m[idx];
        backward(n, s, out.values().col(j).data());
    }
    return out;
}

FlatField fourier_project(const FlatField& f, int k)
{
    return fourier_project(f, k, k);
}

FlatField fourier_project(const FlatField& f, int lo, int hi)
{
    return apply_symbol(f, [lo, hi](int a, int b) {
        const double r = std::hypot(double(a), double(b));
        double m = 0.0;
        for (int k = lo; k <= hi; ++k) m += flat_bump(std::ldexp(r, -k));
        return m;
    });
}

FlatField fourier_low(const FlatField& f)
{
    return apply_symbol(f, [](int a, int b) { return flat_cutoff(2.0 * std::hypot(double(a), double(b))); });
}

int flat_frequency_extent(const FlatField& f, double tol)
{
    const int n = f.n();
    std::vector<Spectrum> spectra;
    double peak = 0.0;
    for (int j = 0; j < f.n_t(); ++j) {
        spectra.push_back(forward(n, f.values().col(j).data()));
        for (const auto& c : spectra.back()) peak = std::max(peak, std::abs(c));
    }
    int extent = 0;
    if (peak == 0.0) return 0;
    for (const auto& s : spectra) {
        for_each_mode(n, [&](std::size_t idx, int k1, int xi2) {
            if (std::abs(s[idx]) > tol * peak) extent = std::max({extent, k1, std::abs(xi2)});
        });
    }
    return extent;
}

FlatField flat_partial(const FlatField& f, int axis)
{
    if (axis != 1 && axis != 2) throw DomainError("flat_partial: axis must be 1 or 2");
    const int n = f.n();
    FlatField out(n, f.n_t());
    for (int j = 0; j < f.n_t(); ++j) {
        Spectrum s = forward(n, f.values().col(j).data());
        for_each_mode(n, [&](std::size_t idx, int k1, int xi2) {
            const int xi = axis == 1 ? k1 : xi2;
            s[idx] *= (std::abs(xi) == n / 2) ? Complex(0.0) : Complex(0.0, double(xi));
        });
        backward(n, s, out.values().col(j).data());
    }
    return out;
}

FlatField flat_dt(const FlatField& f)
{
    const int m = f.n_t();
    if (m < 5) throw DomainError("flat_dt needs at least 5 time nodes");
    FlatField out(f.n(), m);
    const MatrixXd& v = f.values();
    for (int j = 0; j < m; ++j) {
        out.values().col(j) = detail::derivative_at<VectorXd>(j, m, f.dt(), [&](int i) { return VectorXd(v.col(i)); });
    }
    return out;
}

FlatField flat_time_integral(const FlatField& f)
{
    const auto w = trapezoid_weights(f.n_t());
    VectorXd s = VectorXd::Zero(f.nodes());
    for (int j = 0; j < f.n_t(); ++j) s += w[j] * f.values().col(j);
    return FlatField(f.n(), MatrixXd(s));
}

FlatField flat_cumulative(const FlatField& f)
{
    FlatField out(f.n(), f.n_t());
    const MatrixXd& v = f.values();
    for (int j = 1; j < f.n_t(); ++j) {
        out.values().col(j) = out.values().col(j - 1) + 0.5 * f.dt() * (v.col(j - 1) + v.col(j));
    }
    return out;
}

double flat_lebesgue(const FlatField& f, double p, int j)
{
    if (!(p >= 1.0)) throw DomainError("flat_lebesgue: p must be in [1, inf]");
    const auto col = f.values().col(j);
    if (std::isinf(p)) return col.cwiseAbs().maxCoeff();
    return std::pow(f.cell() * col.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

double flat_mixed(const FlatField& f, const NormSpec& spec)
{
    spec.validate();
    const auto w = trapezoid_weights(f.n_t());
    const MatrixXd& v = f.values();
    if (spec.order == NormSpec::Order::t_then_x) {
        std::vector<double> a(f.n_t());
        for (int j = 0; j < f.n_t(); ++j) a[j] = flat_lebesgue(f, spec.p, j);
        return lq(w, a.data(), f.n_t(), 1, spec.q);
    }
    FlatField inner(f.n(), 1);
    for (Index i = 0; i < f.nodes(); ++i) inner.values()(i, 0) = lq(w, &v(i, 0), f.n_t(), v.rows(), spec.q);
    return flat_lebesgue(inner, spec.p);
}

double flat_besov(const FlatField& f, double theta, int j)
{
    const FlatField s = f.n_t() == 1 ? f : f.slice(j);
    const MatrixXd b = band_norms(s, flat_top_band(f.n()));
    double total = b(0, 0);
    for (Index k = 1; k < b.rows(); ++k) total += std::exp2(theta * double(k - 1)) * b(k, 0);
    return total;
}

double flat_besov_mixed(const FlatField& f, double q)
{
    const MatrixXd b = band_norms(f, flat_top_band(f.n()));
    const VectorXd per_slice = b.colwise().sum().transpose();
    return lq(trapezoid_weights(f.n_t()), per_slice.data(), f.n_t(), 1, q);
}

namespace {

/// Per-slice Parseval energies of f: ‖f‖², Σ‖∂_a f‖², Σ_{a≤b}‖∂_a∂_b f‖², with the
/// Nyquist mode annihilated by ∂ as in flat_partial.
MatrixXd derivative_energies(const FlatField& f)
{
    const int n = f.n();
    const std::size_t size = std::size_t(n) * (n / 2 + 1);
    MatrixXd weights(3, Index(size));
    for_each_mode(n, [&](std::size_t idx, int k1, int xi2) {
        const double a = k1 == n / 2 ? 0.0 : double(k1) * k1;
        const double b = std::abs(xi2) == n / 2 ? 0.0 : double(xi2) * xi2;
        const double w = parseval_weight(k1, n);
        weights.col(Index(idx)) << w, w * (a + b), w * (a * a + a * b + b * b);
    });
    VectorXd power = VectorXd::Zero(Index(size));
    MatrixXd out(3, f.n_t());
    for (int j = 0; j < f.n_t(); ++j) {
        const Spectrum s = forward(n, f.values().col(j).data());
        for (std::size_t idx = 0; idx < size; ++idx) power[Index(idx)] = std::norm(s[idx]);
        out.col(j) = weights * power;
    }
    return out * (f.cell() / (double(n) * n));
}

double trapezoid(const VectorXd& a)
{
    const auto w = trapezoid_weights(int(a.size()));
    double s = 0.0;
    for (Index j = 0; j < a.size(); ++j) s += w[j] * a[j];
    return s;
}

} // namespace

double flat_h1(const FlatField& f)
{
    const MatrixXd e = derivative_energies(f);
    const MatrixXd et = derivative_energies(flat_dt(f));
    return std::sqrt(trapezoid(e.row(0).transpose() + e.row(1).transpose() + et.row(0).transpose()));
}

double flat_h2(const FlatField& f)
{
    const FlatField ft = flat_dt(f);
    const MatrixXd e = derivative_energies(f);
    const MatrixXd et = derivative_energies(ft);
    const MatrixXd ett = derivative_energies(flat_dt(ft));
    const VectorXd total = (e.colwise().sum() + et.topRows(2).colwise().sum() + ett.row(0)).transpose();
    return std::sqrt(trapezoid(total));
}

FlatField flat_random_field(int n, int n_t, const FlatSampleSpec& spec, int sample, int stream)
{
    if (spec.max_band < 0 || spec.max_band > flat_max_band(n)) {
        throw DomainError("flat_random_field: max_band does not fit the " + std::to_string(n) + " grid");
    }
    if (spec.t_modes < 1) throw DomainError("flat_random_field: t_modes must be positive");
    std::seed_seq seq{std::uint64_t(spec.seed), std::uint64_t(sample), std::uint64_t(stream)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;

    const double radius = std::ldexp(1.0, spec.max_band + 1);
    const int R = int(radius);
    struct Mode
    {
        int xi1, xi2;
        std::vector<Complex> z;
    };
    std::vector<Mode> modes;
    for (int xi1 = 0; xi1 < R; ++xi1) {
        for (int xi2 = -R + 1; xi2 < R; ++xi2) {
            if (xi1 == 0 && xi2 < 0) continue;
            const double r2 = double(xi1) * xi1 + double(xi2) * xi2;
            if (r2 >= radius * radius) continue;
            const double w = std::pow(1.0 + r2, -0.5 * spec.slope);
            Mode m{xi1, xi2, {}};
            for (int q = 0; q < spec.t_modes; ++q) {
                const double a = normal(rng), b = normal(rng);
                m.z.emplace_back(w * a, w * b);
            }
            modes.push_back(std::move(m));
        }
    }

    FlatField out(n, n_t);
    const int h = n / 2 + 1;
    for (int j = 0; j < n_t; ++j) {
        const double t = out.t(j);
        Spectrum s(std::size_t(n) * h);
        for (const auto& m : modes) {
            Complex c(0.0);
            for (int q = 0; q < spec.t_modes; ++q) c += m.z[q] * std::polar(1.0, std::numbers::pi * q * t);
            const auto at = [&](int k1, int xi2) -> Complex& { return s[std::size_t((xi2 + n) % n) * h + k1]; };
            if (m.xi1 == 0 && m.xi2 == 0) {
                at(0, 0) += c.real();
            } else if (m.xi1 == 0) {
                at(0, m.xi2) += 0.5 * c;
                at(0, -m.xi2) += 0.5 * std::conj(c);
            } else {
                at(m.xi1, m.xi2) += 0.5 * c;
            }
        }
        for (auto& c : s) c *= double(n) * n;
        backward(n, s, out.values().col(j).data());
    }
    return out;
}

FlatPropertyReport flat_property_report(const std::vector<FlatField>& samples)
{
    FlatPropertyReport rep;
    const std::vector<double> ps_bounded{1.0, 2.0, 4.0, INFINITY};
    const std::vector<double> ps_band{2.0, 4.0, INFINITY};
    const auto p_name = [](double p) { return std::isinf(p) ? std::string("inf") : std::to_string(int(p)); };

    std::map<std::string, RatioReport> reports;
    const auto report = [&](const std::string& id) -> RatioReport& {
        auto it = reports.find(id);
        if (it == reports.end()) it = reports.emplace(id, RatioReport(id)).first;
        return it->second;
    };

    for (int sid = 0; sid < int(samples.size()); ++sid) {
        const FlatField& f = samples[sid];
        const int n = f.n();
        const FlatField f0 = f.slice(0);
        const FlatField g1 = flat_partial(f0, 1), g2 = flat_partial(f0, 2);
        const auto grad_norm = [](const FlatField& a, const FlatField& b, double p) {
            FlatField m(a.n(), MatrixXd((a.values().array().square() + b.values().array().square()).sqrt()));
            return flat_lebesgue(m, p);
        };
        const double f_l2 = flat_lebesgue(f0, 2.0);

        for (int k = 0; k <= flat_max_band(n); ++k) {
            const FlatField pk = fourier_project(f0, k);
            const double two_k = std::ldexp(1.0, k);
            for (double p : ps_bounded) {
                report("lp2_bounded_L" + p_name(p)).add(flat_lebesgue(pk, p), flat_lebesgue(f0, p), sid, n, k);
            }
            const FlatField d1 = flat_partial(pk, 1), d2 = flat_partial(pk, 2);
            for (double p : ps_band) {
                report("lp3_gradient_L" + p_name(p)).add(grad_norm(d1, d2, p), two_k * flat_lebesgue(f0, p), sid, n, k);
                report("lp3_inverse_L" + p_name(p)).add(two_k * flat_lebesgue(pk, p), grad_norm(g1, g2, p), sid, n, k);
            }
            report("lp4_bernstein_Linf").add(flat_lebesgue(pk, INFINITY), two_k * f_l2, sid, n, k);
            report("lp4_bernstein_L4").add(flat_lebesgue(pk, 4.0), std::sqrt(two_k) * f_l2, sid, n, k);
        }

        const int top = flat_top_band(n);
        FlatField sum = fourier_low(f0);
        for (int k = 0; k <= top; ++k) {
            const FlatField pk = fourier_project(f0, k);
            sum += pk;
            for (int k2 = k + 2; k2 <= top; ++k2) {
                rep.lp1_residual = std::max(rep.lp1_residual, flat_lebesgue(fourier_project(pk, k2), 2.0) / f_l2);
            }
        }
        rep.partition_residual = std::max(rep.partition_residual, flat_lebesgue(sum - f0, 2.0) / f_l2);

        if (f.n_t() >= 5) {
            const FlatField ft = flat_dt(f);
            const FlatField fi = flat_time_integral(f);
            const double ft_norm = std::sqrt(l2_space_time(ft));
            const double fi_norm = flat_lebesgue(fi, 2.0);
            for (int k = 0; k <= flat_max_band(n); ++k) {
                const FlatField pk = fourier_project(f, k);
                const double dt_res = std::sqrt(l2_space_time(flat_dt(pk) - fourier_project(ft, k)));
                const double int_res = flat_lebesgue(flat_time_integral(pk) - fourier_project(fi, k), 2.0);
                rep.lp5_dt_residual = std::max(rep.lp5_dt_residual, dt_res / ft_norm);
                rep.lp5_integral_residual = std::max(rep.lp5_integral_residual, int_res / fi_norm);
            }
        }
    }
    for (auto& [id, r] : reports) rep.constants.push_back(std::move(r));
    return rep;
}

RatioReport flat_sharp_trace_check(const std::vector<FlatField>& family)
{
    RatioReport r("sharp_trace");
    for (int sid = 0; sid < int(family.size()); ++sid) {
        const FlatField& f = family[sid];
        r.add(flat_mixed(flat_dt(f), NormSpec::Lx_Lt(INFINITY, 2.0)), flat_h2(f), sid, f.n());
    }
    return r;
}

RatioReport flat_sharp_trace_dx1(const std::vector<FlatField>& family)
{
    RatioReport r("sharp_trace_dx1");
    for (int sid = 0; sid < int(family.size()); ++sid) {
        const FlatField& f = family[sid];
        r.add(flat_mixed(flat_partial(f, 1), NormSpec::Lx_Lt(INFINITY, 2.0)), flat_h2(f), sid, f.n());
    }
    return r;
}

RatioReport flat_trace_counterexample(int n, int n_t)
{
    RatioReport r("trace_counterexample");
    std::vector<double> logk, logr;
    for (int K = 1; K <= flat_max_band(n); ++K) {
        const int R = 1 << K;
        VectorXd S = VectorXd::Zero(Index(n) * n);
        for (int xi1 = -R; xi1 <= R; ++xi1) {
            for (int xi2 = -R; xi2 <= R; ++xi2) {
                const double r2 = double(xi1) * xi1 + double(xi2) * xi2;
                if (r2 < 1.0 || r2 > double(R) * R || xi1 == 0) continue;
                const double c = xi1 / (r2 * r2);
                for (int i2 = 0; i2 < n; ++i2) {
                    for (int i1 = 0; i1 < n; ++i1) S[i1 + Index(n) * i2] += c * std::sin(two_pi * (xi1 * i1 + xi2 * i2) / n);
                }
            }
        }
        FlatField f(n, n_t);
        for (int j = 0; j < n_t; ++j) f.values().col(j) = time_bump(f.t(j)) * S;
        const double lhs = flat_mixed(flat_partial(f, 1), NormSpec::Lx_Lt(INFINITY, 2.0));
        const double rhs = flat_h2(f);
        r.add(lhs, rhs, 0, n, K);
        logk.push_back(std::log(double(K)));
        logr.push_back(std::log(lhs / rhs));
    }
    r.fit_exponent = fit_slope(logk, logr);
    return r;
}

RatioReport flat_bilinear_trace_check(const std::vector<FlatPair>& family)
{
    RatioReport r("bilinear_trace");
    for (int sid = 0; sid < int(family.size()); ++sid) {
        const auto& [g, h] = family[sid];
        const FlatField gt = flat_dt(g);
        require_product_safe(gt, h, "bilinear_trace");
        const double lhs = flat_besov(flat_time_integral(pointwise(gt, h)));
        r.add(lhs, flat_h1(g) * flat_h1(h), sid, g.n());
    }
    return r;
}

FlatProductReport flat_product_trace_check(const std::vector<FlatPair>& family)
{
    FlatProductReport rep{RatioReport("product_trace"), RatioReport("product_trace_cumulative")};
    for (int sid = 0; sid < int(family.size()); ++sid) {
        const auto& [g, h] = family[sid];
        require_product_safe(g, h, "product_trace");
        const double g_norm = flat_h1(g) + flat_mixed(g, NormSpec::Lx_Lt(INFINITY, 2.0));
        rep.integrated.add(flat_besov(flat_time_integral(pointwise(g, h))), g_norm * flat_besov_mixed(h, 2.0), sid,
                           g.n());
        rep.cumulative.add(flat_besov_mixed(pointwise(g, flat_cumulative(h)), 2.0), g_norm * flat_besov_mixed(h, 1.0),
                           sid, g.n());
    }
    return rep;
}

DyadicProductReport dyadic_product_check(const std::vector<FlatPair>& family, int input_band)
{
    DyadicProductReport rep{RatioReport("dyadic_product"), 0.0, RatioReport("funny_bernstein")};
    if (family.empty()) return rep;
    const int n = family.front().first.n();
    if (input_band < 0 || input_band > flat_product_band(n)) {
        throw DomainError("dyadic_product_check: input bands would alias on the " + std::to_string(n) + " grid");
    }
    const int kmax = flat_max_band(n);
    std::map<int, double> best;
    for (int sid = 0; sid < int(family.size()); ++sid) {
        const auto& [g, h] = family[sid];
        std::vector<FlatField> gk, hk;
        std::vector<double> g_h1, h_h1;
        for (int k = 0; k <= input_band; ++k) {
            gk.push_back(fourier_project(g, k));
            hk.push_back(fourier_project(h, k));
            g_h1.push_back(flat_h1(gk.back()));
            h_h1.push_back(flat_h1(hk.back()));
            const double sup_l2 = flat_mixed(gk.back(), NormSpec::Lt_Lx(INFINITY, 2.0));
            rep.bernstein.add(sup_l2, std::sqrt(std::ldexp(1.0, k)) * g_h1.back(), sid, n, k);
        }
        for (int k1 = 0; k1 <= input_band; ++k1) {
            for (int k2 = 0; k2 <= input_band; ++k2) {
                const MatrixXd b = band_norms(pointwise(gk[k1], hk[k2]), kmax);
                const double rhs = g_h1[k1] * h_h1[k2];
                for (int k = 0; k <= kmax; ++k) {
                    const double lhs = b.row(k + 1).maxCoeff();
                    if (k >= k1 + 3 && k >= k2 + 3) {
                        rep.low_low_max = std::max(rep.low_low_max, rhs > 0.0 ? lhs / rhs : lhs);
                        continue;
                    }
                    rep.ratios.add(lhs, rhs, sid, n, k, k1, k2);
                    if (rhs > 0.0) {
                        const int d = std::abs(k1 - k) + std::abs(k2 - k);
                        best[d] = std::max(best[d], lhs / rhs);
                    }
                }
            }
        }
    }
    std::vector<double> x, y;
    for (const auto& [d, v] : best) {
        x.push_back(d);
        y.push_back(v);
    }
    rep.ratios.fit_exponent = fit_decay_exponent(x, y);
    return rep;
}

} // namespace geolp
