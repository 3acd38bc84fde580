#include "mrlab/pde.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdint>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace mrlab::pde {

namespace {

double min_coercivity(const std::vector<CMat>& cells, int d) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& B : cells) {
        double c;
        if (d == 2) {
            const double a = B(0, 0).real(), e = B(1, 1).real();
            const Complex off = 0.5 * (B(0, 1) + std::conj(B(1, 0)));
            c = 0.5 * (a + e) - std::sqrt(0.25 * (a - e) * (a - e) + std::norm(off));
        } else {
            c = coercivity(B).coercivity;
        }
        lo = std::min(lo, c);
    }
    return lo;
}

class LinearSolver {
public:
    LinearSolver(std::size_t n, const SolverOptions& opt) : direct_(n <= opt.direct_limit), opt_(opt) {}

    void factorize(const SpMat& A, SolveStats& st) {
        A_ = &A;
        if (direct_) {
            if (!analyzed_) {
                lu_.analyzePattern(A);
                analyzed_ = true;
            }
            lu_.factorize(A);
            if (lu_.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: " + lu_.lastErrorMessage(), 0, 0.0);
        } else {
            it_.setTolerance(opt_.rtol);
            it_.setMaxIterations(opt_.max_iterations);
            it_.compute(A);
            if (it_.info() != Eigen::Success) throw SolverError("ILUT preconditioner setup failed", 0, 0.0);
        }
        ++st.factorizations;
    }

    CVector solve(const CVector& rhs, const CVector& guess, SolveStats& st) {
        const double bn = rhs.norm();
        if (bn == 0.0) return CVector::Zero(rhs.size());
        CVector x;
        double res;
        int iters = 0;
        if (direct_) {
            x = lu_.solve(rhs);
            res = (*A_ * x - rhs).norm() / bn;
            for (int r = 0; r < 3 && res > opt_.rtol; ++r) {
                x += lu_.solve(CVector(rhs - *A_ * x));
                res = (*A_ * x - rhs).norm() / bn;
            }
        } else {
            x = it_.solveWithGuess(rhs, guess);
            iters = static_cast<int>(it_.iterations());
            res = (*A_ * x - rhs).norm() / bn;
            if (it_.info() != Eigen::Success && res > opt_.rtol) {
                throw SolverError("BiCGSTAB did not converge", iters, res);
            }
        }
        if (!std::isfinite(res) || res > opt_.rtol) throw SolverError("linear solve missed the tolerance", iters, res);
        st.max_iterations_used = std::max(st.max_iterations_used, iters);
        st.max_residual = std::max(st.max_residual, res);
        return x;
    }

private:
    bool direct_;
    SolverOptions opt_;
    const SpMat* A_ = nullptr;
    bool analyzed_ = false;
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
    Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<Complex>> it_;
};

}  // namespace

CVector nodal_values(const Discretization& disc, const SpaceTimeField& f, double t, int threads) {
    if (f.dim() != disc.d) throw RangeError("forcing dimension does not match the grid");
    CVector v(static_cast<Eigen::Index>(disc.unknowns()));
    parallel_for(disc.unknowns(), threads, [&](std::size_t i) {
        const Complex z = f.value(t, disc.node(i));
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw Error("forcing is not finite at t=" + std::to_string(t));
        }
        v[static_cast<Eigen::Index>(i)] = z;
    });
    return v;
}

std::vector<CVector> compute_loads(const Discretization& disc, const SpaceTimeField& f, int threads) {
    std::vector<CVector> F;
    F.reserve(disc.steps());
    const double g = 0.5 / std::sqrt(3.0);
    const double vol = disc.cell_volume();
    for (std::size_t k = 0; k < disc.steps(); ++k) {
        const double a = disc.times[k], b = disc.times[k + 1];
        const double dt = b - a;
        F.push_back(0.5 * vol * (nodal_values(disc, f, a + (0.5 - g) * dt, threads) +
                                 nodal_values(disc, f, a + (0.5 + g) * dt, threads)));
    }
    return F;
}

DiscreteField solve_forward(const SpaceTimeMatrixField& b, const SpaceTimeField& f,
                            std::shared_ptr<const Discretization> disc, const SolverOptions& opt) {
    if (!disc) throw RangeError("solve_forward needs a discretization");
    const Discretization& D = *disc;
    if (b.dim() != D.d || f.dim() != D.d) throw RangeError("field dimensions do not match the grid");
    if (D.steps() < 1) throw RangeError("time mesh needs at least one step");
    for (std::size_t k = 0; k + 1 < D.times.size(); ++k) {
        if (!(D.times[k + 1] > D.times[k])) throw RangeError("time mesh must be strictly increasing");
    }
    const Assembler asmb(D);
    const std::size_t n = D.unknowns();
    const double vol = D.cell_volume();
    const double theta = D.theta;

    DiscreteField out;
    out.disc = disc;
    out.stats.min_coercivity = std::numeric_limits<double>::infinity();
    CVector u = CVector::Zero(static_cast<Eigen::Index>(n));
    if (opt.store_levels) {
        out.times.push_back(D.times[0]);
        out.levels.push_back(u);
    }
    if (opt.observer) opt.observer(0, D.times[0], u);

    LinearSolver solver(n, opt);
    SpMat K, A;
    bool have_K = false;
    double last_dt = -1.0;
    const double g = 0.5 / std::sqrt(3.0);
    for (std::size_t k = 0; k < D.steps(); ++k) {
        const double ta = D.times[k], tb = D.times[k + 1];
        const double dt = tb - ta;
        const double ts = opt.sampling == TimeSampling::Midpoint ? 0.5 * (ta + tb) : ta;
        bool refactor = false;
        if (!have_K || !b.time_independent()) {
            const auto cells = asmb.sample(b, ts, opt.threads);
            if (opt.check_ellipticity) {
                const double c = min_coercivity(cells, D.d);
                out.stats.min_coercivity = std::min(out.stats.min_coercivity, c);
                if (!(c > 0.0)) {
                    throw RangeError("ellipticity violation during assembly at t=" + std::to_string(ts) +
                                     " (coercivity " + std::to_string(c) + ")");
                }
            }
            K = asmb.stiffness(cells);
            have_K = true;
            refactor = true;
        }
        // Uniform meshes carry rounding noise in Δt; treat those steps as equal.
        if (std::abs(dt - last_dt) > 1e-12 * dt) refactor = true;
        if (refactor) {
            A = K * Complex(theta * dt);
            for (int s : asmb.diagonal_slots()) A.valuePtr()[s] += vol;
            solver.factorize(A, out.stats);
            last_dt = dt;
        }
        const CVector F = 0.5 * vol * (nodal_values(D, f, ta + (0.5 - g) * dt, opt.threads) +
                                       nodal_values(D, f, ta + (0.5 + g) * dt, opt.threads));
        CVector rhs = vol * u + dt * F;
        if (theta < 1.0) rhs -= ((1.0 - theta) * dt) * (K * u);
        u = solver.solve(rhs, u, out.stats);
        if (opt.store_loads) out.loads.push_back(F);
        if (opt.store_levels) {
            out.times.push_back(tb);
            out.levels.push_back(u);
        }
        if (opt.observer) opt.observer(k + 1, tb, u);
    }
    if (!opt.store_levels) {
        out.times.push_back(D.times.back());
        out.levels.push_back(u);
    }
    out.stats.steps = D.steps();
    if (!opt.check_ellipticity) out.stats.min_coercivity = std::numeric_limits<double>::quiet_NaN();
    return out;
}

DualBundle solve_dual(const SpaceTimeMatrixField& b, const SpaceTimeField& g,
                      std::shared_ptr<const Discretization> disc, const SolverOptions& opt) {
    if (!disc) throw RangeError("solve_dual needs a discretization");
    const std::size_t N = disc->steps();
    auto ref = std::make_shared<Discretization>(*disc);
    ref->times.resize(N + 1);
    for (std::size_t j = 0; j <= N; ++j) ref->times[j] = -disc->times[N - j];

    const ReflectedAdjoint A(b);
    const LambdaSpaceTimeField gr(g.dim(), [&g](double s, const Vec& x) { return g.value(-s, x); });
    SolverOptions o = opt;
    o.store_levels = true;
    o.store_loads = true;
    o.observer = nullptr;
    DiscreteField vr = solve_forward(A, gr, ref, o);

    DualBundle out;
    out.reflected_times = ref->times;
    out.v.disc = disc;
    out.v.stats = vr.stats;
    out.v.times = disc->times;
    out.v.levels.resize(N + 1);
    for (std::size_t k = 0; k <= N; ++k) out.v.levels[k] = std::move(vr.levels[N - k]);
    out.g_loads.resize(N);
    for (std::size_t k = 0; k < N; ++k) out.g_loads[k] = std::move(vr.loads[N - 1 - k]);
    out.v.loads = out.g_loads;
    return out;
}

// ---------------------------------------------------------------------------

struct DiscreteNorms::Impl {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> riesz;
};

DiscreteNorms::DiscreteNorms(const Discretization& disc) : DiscreteNorms(Assembler(disc)) {}

DiscreteNorms::DiscreteNorms(const Assembler& asmb)
    : K_(asmb.laplacian().real()), vol_(asmb.disc().cell_volume()), impl_(std::make_unique<Impl>()) {
    Eigen::SparseMatrix<double> R = K_;
    for (Eigen::Index i = 0; i < R.rows(); ++i) R.coeffRef(i, i) += vol_;
    impl_->riesz.compute(R);
    if (impl_->riesz.info() != Eigen::Success) throw SolverError("Riesz map factorization failed", 0, 0.0);
}

DiscreteNorms::~DiscreteNorms() = default;

double DiscreteNorms::l2(const CVector& u) const { return std::sqrt(vol_) * u.norm(); }

double DiscreteNorms::grad_l2(const CVector& u) const {
    const Eigen::VectorXd re = u.real(), im = u.imag();
    const double q = re.dot(K_ * re) + im.dot(K_ * im);
    return std::sqrt(std::max(0.0, q));
}

double DiscreteNorms::h1(const CVector& u) const {
    const double a = l2(u), b = grad_l2(u);
    return std::sqrt(a * a + b * b);
}

double DiscreteNorms::hminus1_load(const CVector& F) const {
    const Eigen::VectorXd re = F.real(), im = F.imag();
    const Eigen::VectorXd pr = impl_->riesz.solve(re), pi = impl_->riesz.solve(im);
    if (impl_->riesz.info() != Eigen::Success) throw SolverError("Riesz solve failed", 0, 0.0);
    return std::sqrt(std::max(0.0, re.dot(pr) + im.dot(pi)));
}

double DiscreteNorms::hminus1(const CVector& g) const { return hminus1_load(vol_ * g); }

Complex DiscreteNorms::pairing(const CVector& a, const CVector& b) const { return vol_ * a.dot(b); }

// ---------------------------------------------------------------------------

EnergyReport energy_check(const DiscreteField& u, const SpaceTimeMatrixField& b, const SpaceTimeField& f,
                          const Discretization& disc, std::optional<double> lambda) {
    if (disc.theta != 1.0) throw RangeError("energy_check requires theta = 1");
    const std::size_t N = disc.steps();
    if (u.levels.size() != N + 1 || u.times != disc.times) throw RangeError("energy_check: mesh mismatch");
    const std::vector<CVector> loads = u.loads.size() == N ? u.loads : compute_loads(disc, f);
    double lam;
    if (lambda) {
        lam = *lambda;
    } else if (std::isfinite(u.stats.min_coercivity)) {
        lam = u.stats.min_coercivity;
    } else {
        const Assembler asmb(disc);
        lam = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < N; ++k) {
            lam = std::min(lam, min_coercivity(asmb.sample(b, 0.5 * (disc.times[k] + disc.times[k + 1]), 1), disc.d));
        }
    }
    const DiscreteNorms norms(disc);
    EnergyReport r;
    r.lambda = lam;
    Complex pair{};
    double fn = 0.0, un = 0.0, grad = 0.0, full = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        const double dt = disc.times[k + 1] - disc.times[k];
        const CVector& uk = u.levels[k + 1];
        pair += dt * loads[k].dot(uk);
        const double g = norms.grad_l2(uk), h = norms.h1(uk), fm = norms.hminus1_load(loads[k]);
        grad += dt * g * g;
        full += dt * h * h;
        un += dt * h * h;
        fn += dt * fm * fm;
    }
    const double uN = norms.l2(u.levels[N]);
    r.gradient_term = lam * grad;
    r.terminal_term = 0.5 * uN * uN;
    r.lhs = r.gradient_term + r.terminal_term;
    r.pairing = std::abs(pair);
    r.f_norm = std::sqrt(fn);
    r.u_norm = std::sqrt(un);
    r.rhs = r.f_norm * r.u_norm;
    r.margin = r.rhs - r.lhs;
    const double slack = 1e-10 * std::max(r.rhs, 1e-300);
    r.holds = r.lhs <= r.pairing + slack && r.pairing <= r.rhs + slack;
    r.full_norm_lhs = lam * full;
    r.full_norm_holds = r.full_norm_lhs <= r.rhs + slack;
    return r;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'M', 'R', 'L', 'F', 'I', 'E', 'L', 'D'};

template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian host");
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is, long long& off) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw FormatError("checkpoint truncated", off);
    off += static_cast<long long>(sizeof v);
    return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const DiscreteField& u) {
    if (!u.disc) throw RangeError("checkpoint needs the field's discretization");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    const Discretization& D = *u.disc;
    os.write(kCheckpointMagic, 8);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(D.d));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(D.n));
    put<std::uint32_t>(os, 0);
    put<double>(os, D.lo);
    put<double>(os, D.hi);
    put<std::uint64_t>(os, u.levels.size());
    put<std::uint64_t>(os, D.unknowns());
    for (std::size_t k = 0; k < u.levels.size(); ++k) {
        put<double>(os, u.times[k]);
        for (Eigen::Index i = 0; i < u.levels[k].size(); ++i) {
            put<double>(os, u.levels[k][i].real());
            put<double>(os, u.levels[k][i].imag());
        }
    }
    if (!os) throw Error("failed writing checkpoint '" + path.string() + "'");
}

DiscreteField read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open checkpoint '" + path.string() + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw FormatError("bad checkpoint magic", 0);
    long long off = 8;
    const auto version = get<std::uint32_t>(is, off);
    if (version != 1) throw FormatError("unsupported checkpoint version", off - 4);
    auto D = std::make_shared<Discretization>();
    D->d = static_cast<int>(get<std::uint32_t>(is, off));
    D->n = static_cast<int>(get<std::uint32_t>(is, off));
    (void) get<std::uint32_t>(is, off);
    D->lo = get<double>(is, off);
    D->hi = get<double>(is, off);
    if (D->d < 1 || D->d > kMaxDim || D->n < 2 || !(D->hi > D->lo)) throw FormatError("invalid checkpoint grid", off);
    D->h = (D->hi - D->lo) / D->n;
    const auto levels = get<std::uint64_t>(is, off);
    const auto unknowns = get<std::uint64_t>(is, off);
    if (unknowns != D->unknowns()) throw FormatError("checkpoint unknown count disagrees with the grid", off - 8);
    DiscreteField u;
    for (std::uint64_t k = 0; k < levels; ++k) {
        const double t = get<double>(is, off);
        CVector v(static_cast<Eigen::Index>(unknowns));
        for (std::uint64_t i = 0; i < unknowns; ++i) {
            const double re = get<double>(is, off);
            const double im = get<double>(is, off);
            v[static_cast<Eigen::Index>(i)] = Complex(re, im);
        }
        u.times.push_back(t);
        u.levels.push_back(std::move(v));
    }
    D->times = u.times;
    u.disc = D;
    return u;
}

}  // namespace mrlab::pde
