#include <geolp/lp.hpp>

#include <geolp/fit.hpp>

#include <cmath>
#include <limits>
#include <ostream>

namespace geolp {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

/// Row label for P_{<0}.
constexpr int low_band = -1;

double binomial(int n, int k)
{
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double dual_exponent(double p)
{
    return p / (p - 1.0);
}

} // namespace

LPKernel::LPKernel(int N, int n_der)
    : m_N(N)
    , m_n(n_der)
    , m_scale(1.0)
{
    if (n_der < 2) throw DomainError("kernel derivative order must be at least 2");
    if (n_der > N) throw DomainError("kernel derivative order exceeds the moment order N");
    m_scale = 1.0 / raw(peak());
}

double LPKernel::raw(double mu) const
{
    return std::pow(mu, m_n) / std::pow(1.0 + mu, m_N + 1);
}

double LPKernel::symbol(double mu) const
{
    if (mu < 0.0) throw DomainError("symbol argument must be nonnegative");
    return m_scale * raw(mu);
}

double LPKernel::time_kernel(double tau) const
{
    const double decay = std::exp(-tau);
    if (tau < 0.0 || decay == 0.0) return 0.0;
    // c·dⁿ/dτⁿ[τ^N e^{−τ}] = c Σ_j C(n,j) N!/(N−j)! τ^{N−j} (−1)^{n−j} e^{−τ}, c·N! = scale.
    double sum = 0.0;
    for (int j = 0; j <= m_n; ++j) {
        const double sign = ((m_n - j) % 2 == 0) ? 1.0 : -1.0;
        sum += sign * binomial(m_n, j) / factorial(m_N - j) * std::pow(tau, m_N - j);
    }
    return m_scale * sum * decay;
}

double LPKernel::peak() const
{
    return double(m_n) / (m_N + 1 - m_n);
}

double LPKernel::sup_mu_symbol() const
{
    const double mu = double(m_n + 1) / (m_N - m_n);
    return m_N > m_n ? mu * symbol(mu) : inf;
}

double LPKernel::sup_symbol_over_mu() const
{
    const double mu = double(m_n - 1) / (m_N + 2 - m_n);
    return symbol(mu) / mu;
}

std::string LPKernel::name() const
{
    return "N=" + std::to_string(m_N) + ";n=" + std::to_string(m_n);
}

LPKernel make_kernel(int N, int n_der)
{
    return LPKernel(N, n_der);
}

double symbol(const LPKernel& kernel, double mu)
{
    return kernel.symbol(mu);
}

std::string to_string(LPMode mode)
{
    return mode == LPMode::raw ? "raw" : "normalized";
}

LPMode parse_lp_mode(const std::string& s)
{
    if (s == "raw") return LPMode::raw;
    if (s == "normalized") return LPMode::normalized;
    throw ConfigError("unknown LP mode '" + s + "'");
}

LPFamily::LPFamily(LPKernel kernel, int k_min, int k_max, LPMode mode)
    : m_kernel(kernel)
    , m_kmin(k_min)
    , m_kmax(k_max)
    , m_mode(mode)
{
    if (k_min > k_max) throw DomainError("LP family range is empty");
}

void LPFamily::check(int k) const
{
    if (k < m_kmin || k > m_kmax) {
        throw DomainError("LP index " + std::to_string(k) + " outside [" + std::to_string(m_kmin) +
                          ", " + std::to_string(m_kmax) + "]");
    }
}

double LPFamily::sigma(int k, double lambda) const
{
    return m_kernel.symbol(std::ldexp(lambda, -2 * k));
}

double LPFamily::symbol(int k, double lambda) const
{
    check(k);
    const double sk = sigma(k, lambda);
    if (m_mode == LPMode::raw) return sk;
    double denom = 0.0;
    for (int j = m_kmin; j <= m_kmax; ++j) {
        const double sj = sigma(j, lambda);
        denom += sj * sj;
    }
    return denom > 0.0 ? sk / std::sqrt(denom) : 0.0;
}

double LPFamily::low_symbol(double lambda) const
{
    if (m_mode == LPMode::raw) {
        double sum = (lambda == 0.0) ? 1.0 : 0.0;
        for (int k = m_kmin - 8; k < 0; ++k) sum += sigma(k, lambda);
        return sum;
    }
    double high = 0.0;
    for (int k = std::max(0, m_kmin); k <= m_kmax; ++k) {
        const double sk = symbol(k, lambda);
        high += sk * sk;
    }
    return std::sqrt(std::max(0.0, 1.0 - high));
}

VectorXd LPFamily::multiplier(int k, const VectorXd& lambda) const
{
    check(k);
    VectorXd m(lambda.size());
    for (Index j = 0; j < lambda.size(); ++j) m[j] = symbol(k, lambda[j]);
    return m;
}

VectorXd LPFamily::low_multiplier(const VectorXd& lambda) const
{
    VectorXd m(lambda.size());
    for (Index j = 0; j < lambda.size(); ++j) m[j] = low_symbol(lambda[j]);
    return m;
}

TensorField project(const TensorField& f, int k, const LPFamily& family, const EigenBasis& basis)
{
    return basis.apply(f, family.multiplier(k, basis.eigenvalues()));
}

TensorField project_band(
    const TensorField& f, int k_lo, int k_hi, const LPFamily& family, const EigenBasis& basis)
{
    VectorXd m = VectorXd::Zero(basis.size());
    for (int k = k_lo; k <= k_hi; ++k) m += family.multiplier(k, basis.eigenvalues());
    return basis.apply(f, m);
}

TensorField low_part(const TensorField& f, const LPFamily& family, const EigenBasis& basis)
{
    return basis.apply(f, family.low_multiplier(basis.eigenvalues()));
}

TensorField project_quadrature(
    const TensorField& f,
    int k,
    const LPKernel& kernel,
    const EigenBasis& basis,
    const QuadratureConfig& cfg)
{
    if (cfg.nodes < 2) throw DomainError("quadrature needs at least two nodes");
    const double lo = std::log(std::ldexp(1.0, -2 * (cfg.k_max + 5)));
    const double hi = std::log(cfg.tau_max * std::ldexp(1.0, -2 * std::min(k, 0)));
    const double du = (hi - lo) / (cfg.nodes - 1);
    const double scale = std::ldexp(1.0, 2 * k);
    const VectorXd& lambda = basis.eigenvalues();

    // Σ_i w_i m_k(τ_i) U(τ_i)F, applied through the eigen-coefficients of F.
    VectorXd m = VectorXd::Zero(lambda.size());
    for (int i = 0; i < cfg.nodes; ++i) {
        const double tau = std::exp(lo + i * du);
        const double w = ((i == 0 || i == cfg.nodes - 1) ? 0.5 : 1.0) * du * tau;
        const double mk = scale * kernel.time_kernel(scale * tau);
        if (mk == 0.0) continue;
        m.array() += w * mk * (-tau * lambda.array()).exp();
    }
    TensorField out = basis.apply(f, m);

    if (cfg.verify) {
        VectorXd exact(lambda.size());
        for (Index j = 0; j < lambda.size(); ++j) exact[j] = kernel.symbol(std::ldexp(lambda[j], -2 * k));
        const VectorXd c = basis.coefficients(f);
        const double err = (m - exact).cwiseProduct(c).norm();
        if (err > cfg.tolerance * c.norm()) {
            throw DomainError("quadrature disagrees with the spectral symbol; increase the node count");
        }
    }
    return out;
}

void LPPropertyReport::write_csv(std::ostream& os) const
{
    os << "property_id,mode,rank,p,k,k_prime,lhs,bound,ratio,fitted_exponent\n";
    os.precision(17);
    for (const auto& r : rows) {
        os << r.property_id << ',' << to_string(r.mode) << ',' << r.rank << ',' << r.p << ',' << r.k
           << ',' << r.k_prime << ',' << r.lhs << ',' << r.bound << ',' << r.ratio << ','
           << r.fitted_exponent << '\n';
    }
}

LPPropertyReport property_report(
    const LPFamily& family,
    const Surface& s,
    const EigenBasis& rank0,
    const EigenBasis* rank1,
    const std::vector<TensorField>& samples,
    const LPReportConfig& cfg)
{
    LPPropertyReport rep;
    rep.kernel = family.kernel().name();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double Kn = lebesgue_norm(TensorField::scalar(s.gauss_curvature()), 2.0, s);
    rep.curvature_l2 = Kn;
    const double p = cfg.curvature_p;
    const LPFamily tilde(cfg.second_kernel, family.k_min(), family.k_max(), LPMode::raw);
    const LPMode mode = family.mode();

    auto nrm = [&](const TensorField& t, double q) { return lebesgue_norm(t, q, s); };
    auto add = [&](const std::string& id, int rank, double q, int k, int kp, double lhs, double bound) {
        if (!(bound > 0.0)) return;
        const double ratio = lhs / bound;
        rep.rows.push_back({id, mode, rank, q, k, kp, lhs, bound, ratio, nan});
        auto [it, inserted] = rep.constants.emplace(id, ratio);
        if (!inserted) it->second = std::max(it->second, ratio);
    };

    // max over samples and k of ‖P_k P̃_{k'}F‖_q/‖F‖_q, per (q, |k−k'|).
    std::map<double, std::map<int, double>> orth;

    for (const TensorField& F : samples) {
        const int r = F.rank;
        const EigenBasis* B = (r == 0) ? &rank0 : (r == 1 ? rank1 : nullptr);
        if (!B) continue;
        const VectorXd c = B->coefficients(F);
        const VectorXd& lam = B->eigenvalues();
        auto synth = [&](const VectorXd& mult) { return B->synthesize(mult.cwiseProduct(c)); };
        auto grad = [&](const TensorField& t) { return s.covariant_derivative(t); };
        auto hess = [&](const TensorField& t) {
            return t.rank == 0 ? s.hessian(t.values()) : grad(grad(t));
        };

        std::map<double, double> Fp;
        for (double q : {1.0, 4.0 / 3.0, 1.2, 2.0, 4.0, 6.0, inf}) Fp[q] = nrm(F, q);
        const double F2 = Fp[2.0];
        if (!(F2 > 0.0)) continue;
        // |ΔF| through the basis; the sign of the multiplier does not enter the norms.
        const TensorField lapField = synth(lam);
        std::map<double, double> lapFp;
        for (double q : {2.0, 4.0, inf}) lapFp[q] = nrm(lapField, q);
        const double gradF = nrm(grad(F), 2.0);

        std::vector<VectorXd> mk;
        for (int k = cfg.k_lo; k <= cfg.k_hi; ++k) mk.push_back(family.multiplier(k, lam));
        const VectorXd mlow = family.low_multiplier(lam);
        const TensorField Plow = synth(mlow);

        // i) L^p boundedness of single bands, the full band and the low part.
        for (double q : {1.0, 2.0, 4.0, inf}) {
            VectorXd band = VectorXd::Zero(lam.size());
            for (int k = cfg.k_lo; k <= cfg.k_hi; ++k) {
                const VectorXd& m = mk[k - cfg.k_lo];
                band += m;
                add("lp_bounded", r, q, k, k, nrm(synth(m), q), Fp[q]);
            }
            add("lp_bounded", r, q, cfg.k_lo, cfg.k_hi, nrm(synth(band), q), Fp[q]);
            add("lp_bounded_low", r, q, low_band, low_band, nrm(Plow, q), Fp[q]);
        }

        // ii) almost orthogonality against the second kernel.
        for (int k = cfg.k_lo; k <= cfg.k_hi; ++k) {
            for (int kp = cfg.k_lo; kp <= cfg.k_hi; ++kp) {
                const VectorXd m = mk[k - cfg.k_lo].cwiseProduct(tilde.multiplier(kp, lam));
                const TensorField PP = synth(m);
                const int d = std::abs(k - kp);
                for (double q : {2.0, 4.0, inf}) {
                    const double lhs = nrm(PP, q);
                    add("almost_orthogonality", r, q, k, kp, lhs, std::ldexp(Fp[q], -2 * d));
                    double& best = orth[q][d];
                    best = std::max(best, lhs / Fp[q]);
                }
            }
        }

        // iii) Bessel over the whole family range; Σ 2^{2k}‖P_kf‖² against ‖∇f‖².
        double bessel = 0.0;
        double weighted = 0.0;
        for (int k = family.k_min(); k <= family.k_max(); ++k) {
            const double a = nrm(synth(family.multiplier(k, lam)), 2.0);
            bessel += a * a;
            if (k >= 0) weighted += std::ldexp(a * a, 2 * k);
        }
        add("bessel", r, 2, family.k_min(), family.k_max(), bessel, F2 * F2);
        add("square_sum_gradient", r, 2, 0, family.k_max(), weighted, gradF * gradF);

        // Normalized mode: P_{<0}² + Σ_{k≥0} P_k² = I applied as operators.
        if (mode == LPMode::normalized) {
            TensorField acc = B->apply(B->apply(F, mlow), mlow);
            for (int k = std::max(0, family.k_min()); k <= family.k_max(); ++k) {
                const VectorXd m = family.multiplier(k, lam);
                acc += B->apply(B->apply(F, m), m);
            }
            const double res = nrm(acc - F, 2.0) / F2;
            rep.reconstruction_residual = std::max(rep.reconstruction_residual, res);
            add("reconstruction", r, 2, 0, family.k_max(), res * F2, F2);
        }

        for (int k = cfg.k_lo; k <= cfg.k_hi; ++k) {
            const VectorXd& m = mk[k - cfg.k_lo];
            const TensorField Pk = synth(m);
            const double two_k = std::ldexp(1.0, k);

            // iv) reproducing property: the symbol m̂² against P_k∘P_k.
            const TensorField twice = B->apply(Pk, m);
            const TensorField bar = synth(m.cwiseProduct(m));
            add("reproducing", r, 2, k, k, nrm(twice - bar, 2.0), F2);

            // v) finite band.
            const TensorField lapPk = synth(lam.cwiseProduct(m));
            for (double q : {2.0, 4.0, inf}) {
                add("finite_band_laplacian", r, q, k, k, nrm(lapPk, q), two_k * two_k * Fp[q]);
                add("finite_band_laplacian_inverse", r, q, k, k, nrm(Pk, q), lapFp[q] / (two_k * two_k));
            }
            add("finite_band_gradient", r, 2, k, k, nrm(grad(Pk), 2.0), two_k * F2);
            add("finite_band_gradient_inverse", r, 2, k, k, nrm(Pk, 2.0), gradF / two_k);
            if (r == 0 && rank1) {
                const TensorField PkGrad = project(grad(F), k, family, *rank1);
                add("finite_band_gradient_dual", r, 2, k, k, nrm(PkGrad, 2.0), two_k * F2);
            }

            // vi) weak Bernstein and its dual.
            for (double q : {4.0, 6.0}) {
                const double shape = std::pow(two_k, 1.0 - 2.0 / q) + 1.0;
                add("weak_bernstein", r, q, k, k, nrm(Pk, q), shape * F2);
                add("weak_bernstein_dual", r, q, k, k, nrm(Pk, 2.0), shape * Fp[dual_exponent(q)]);
            }

            // vii) strong scalar Bernstein and the dual L¹ → L² form.
            if (r == 0) {
                add("strong_scalar_bernstein", r, inf, k, k, nrm(Pk, inf), two_k * F2);
                add("strong_scalar_bernstein_dual", r, 1, k, k, nrm(Pk, 2.0), two_k * Fp[1.0]);
            }

            // viii)–x) curvature-dependent bounds.
            const double a = std::pow(two_k, (p - 2.0) / (p - 1.0));
            add("strong_tensor_bernstein", r, p, k, k, nrm(Pk, inf),
                (two_k + a * std::pow(Kn, 1.0 / (p - 1.0))) * F2);
            add("dyadic_bochner", r, p, k, k, nrm(hess(Pk), 2.0),
                (two_k * two_k + two_k * Kn + a * std::pow(Kn, p / (p - 1.0))) * F2);
            add("dyadic_linf", r, p, k, k, nrm(Pk, inf),
                (two_k + std::pow(two_k, (p - 1.0) / p) * std::pow(Kn, 1.0 / p) +
                 a * std::pow(Kn, 1.0 / (p - 1.0))) *
                    F2);
        }

        // Low-frequency companions.
        for (double q : {4.0, 6.0}) {
            add("weak_bernstein_low", r, q, low_band, low_band, nrm(Plow, q), F2);
            add("weak_bernstein_dual_low", r, q, low_band, low_band, nrm(Plow, 2.0), Fp[dual_exponent(q)]);
        }
        if (r == 0) {
            add("strong_scalar_bernstein_low", r, inf, low_band, low_band, nrm(Plow, inf), F2);
            add("strong_scalar_bernstein_dual_low", r, 1, low_band, low_band, nrm(Plow, 2.0), Fp[1.0]);
        }
        add("strong_tensor_bernstein_low", r, p, low_band, low_band, nrm(Plow, inf),
            (1.0 + std::pow(Kn, 1.0 / (p - 1.0))) * F2);
        add("dyadic_bochner_low", r, p, low_band, low_band, nrm(hess(Plow), 2.0),
            (1.0 + Kn + std::pow(Kn, p / (p - 1.0))) * F2);
        add("dyadic_linf_low", r, p, low_band, low_band, nrm(Plow, inf),
            (1.0 + std::pow(Kn, 1.0 / p) + std::pow(Kn, 1.0 / (p - 1.0))) * F2);
    }

    for (const auto& [q, byd] : orth) {
        std::vector<double> d, v;
        for (const auto& [dist, val] : byd) {
            if (dist == 0) continue;
            d.push_back(dist);
            v.push_back(val);
        }
        rep.orthogonality_exponent[q] = fit_decay_exponent(d, v, 1e-13);
    }
    for (auto& row : rep.rows) {
        if (row.property_id == "almost_orthogonality") {
            row.fitted_exponent = rep.orthogonality_exponent[row.p];
        }
    }
    return rep;
}

} // namespace geolp
