#include "symopt/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace symopt {

namespace {

constexpr int kMaxSweeps = 64;
constexpr double kJacobiTol = 1e-15;

double col_dot(const Mat& b, int p, int q) {
    double s = 0.0;
    for (int i = 0; i < b.rows(); ++i) s += b(i, p) * b(i, q);
    return s;
}

void rotate_cols(Mat& b, int p, int q, double c, double s) {
    for (int i = 0; i < b.rows(); ++i) {
        const double bp = b(i, p);
        const double bq = b(i, q);
        b(i, p) = c * bp - s * bq;
        b(i, q) = s * bp + c * bq;
    }
}

// One-sided Jacobi on a tall (rows >= cols) matrix: orthogonalizes the
// columns of B, accumulating the right rotations into V.
void one_sided_jacobi(Mat& b, Mat& v) {
    const int n = b.cols();
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double app = col_dot(b, p, p);
                const double aqq = col_dot(b, q, q);
                const double apq = col_dot(b, p, q);
                if (app == 0.0 || aqq == 0.0) continue;
                if (std::fabs(apq) <= kJacobiTol * std::sqrt(app * aqq)) continue;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_cols(b, p, q, c, s);
                rotate_cols(v, p, q, c, s);
                rotated = true;
            }
        }
        if (!rotated) break;
    }
}

// Fills columns of u marked in `needs_fill` with unit vectors orthonormal to
// all other columns, chosen deterministically from the standard basis.
void complete_basis(Mat& u, const std::vector<bool>& needs_fill) {
    const int m = u.rows();
    const int r = u.cols();
    std::vector<bool> filled(needs_fill.size());
    for (std::size_t k = 0; k < needs_fill.size(); ++k) filled[k] = !needs_fill[k];
    for (int j = 0; j < r; ++j) {
        if (filled[j]) continue;
        for (int e = 0; e < m; ++e) {
            // candidate e_e, orthogonalized twice against the columns present so far
            std::vector<double> w(m, 0.0);
            w[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (int k = 0; k < r; ++k) {
                    if (!filled[k]) continue;
                    double proj = 0.0;
                    for (int i = 0; i < m; ++i) proj += w[i] * u(i, k);
                    for (int i = 0; i < m; ++i) w[i] -= proj * u(i, k);
                }
            }
            double nrm = 0.0;
            for (double x : w) nrm += x * x;
            nrm = std::sqrt(nrm);
            if (nrm > 0.5) {
                for (int i = 0; i < m; ++i) u(i, j) = w[i] / nrm;
                filled[j] = true;
                break;
            }
        }
    }
}

SvdResult svd_tall(const Mat& a) {
    const int m = a.rows();
    const int n = a.cols();
    Mat b = a;
    Mat v = Mat::identity(n);
    one_sided_jacobi(b, v);

    std::vector<double> sigma(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += b(i, j) * b(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return sigma[x] > sigma[y]; });

    SvdResult out;
    out.u = Mat(m, n);
    out.v = Mat(n, n);
    out.sigma.resize(n);
    std::vector<bool> needs_fill(n, false);
    const double sigma_max = sigma.empty() ? 0.0 : sigma[order[0]];
    for (int k = 0; k < n; ++k) {
        const int j = order[k];
        out.sigma[k] = sigma[j];
        for (int i = 0; i < n; ++i) out.v(i, k) = v(i, j);
        // Columns with negligible norm cannot be normalized reliably.
        if (sigma[j] > sigma_max * 1e-300 && sigma[j] > 0.0) {
            for (int i = 0; i < m; ++i) out.u(i, k) = b(i, j) / sigma[j];
        } else {
            needs_fill[k] = true;
        }
    }
    complete_basis(out.u, needs_fill);

    // Sign convention: largest-magnitude entry of each U column positive.
    for (int k = 0; k < n; ++k) {
        int arg = 0;
        double best = -1.0;
        for (int i = 0; i < m; ++i) {
            const double mag = std::fabs(out.u(i, k));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (out.u(arg, k) < 0.0) {
            for (int i = 0; i < m; ++i) out.u(i, k) = -out.u(i, k);
            for (int i = 0; i < n; ++i) out.v(i, k) = -out.v(i, k);
        }
    }
    return out;
}

} // namespace

SvdResult svd(const Mat& a) {
    if (!is_finite(a)) throw InvalidInput("svd: non-finite input");
    if (a.rows() == 0 || a.cols() == 0) throw InvalidInput("svd: empty matrix");
    if (a.rows() >= a.cols()) return svd_tall(a);
    SvdResult t = svd_tall(transpose(a));
    return SvdResult{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

int numerical_rank(const std::vector<double>& sigma) {
    if (sigma.empty() || sigma[0] <= 0.0) return 0;
    int r = 0;
    for (double s : sigma)
        if (s > kRankTol * sigma[0]) ++r;
    return r;
}

int numerical_rank(const Mat& a) { return numerical_rank(svd(a).sigma); }

Mat polar_exact(const Mat& a) {
    const SvdResult s = svd(a);
    return s.u * transpose(s.v);
}

Mat polar_exact_truncated(const Mat& a) {
    const SvdResult s = svd(a);
    const int r = numerical_rank(s.sigma);
    Mat out(a.rows(), a.cols());
    for (int k = 0; k < r; ++k)
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j) out(i, j) += s.u(i, k) * s.v(j, k);
    return out;
}

EigResult eig_sym(const Mat& s) {
    if (s.rows() != s.cols()) throw ShapeError("eig_sym: matrix not square");
    const int n = s.rows();
    Mat a = s;
    Mat q = Mat::identity(n);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                const double scale = std::sqrt(std::fabs(a(p, p) * a(r, r))) + std::fabs(a(p, p)) + std::fabs(a(r, r));
                if (std::fabs(apr) <= kJacobiTol * (scale + std::fabs(apr))) continue;
                const double tau = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = c * t;
                // A <- J^T A J on rows/cols p, r
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akr = a(k, r);
                    a(k, p) = c * akp - sn * akr;
                    a(k, r) = sn * akp + c * akr;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double ark = a(r, k);
                    a(p, k) = c * apk - sn * ark;
                    a(r, k) = sn * apk + c * ark;
                }
                for (int k = 0; k < n; ++k) {
                    const double qkp = q(k, p);
                    const double qkr = q(k, r);
                    q(k, p) = c * qkp - sn * qkr;
                    q(k, r) = sn * qkp + c * qkr;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }

    std::vector<double> lambda(n);
    for (int i = 0; i < n; ++i) lambda[i] = a(i, i);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return lambda[x] > lambda[y]; });

    EigResult out;
    out.q = Mat(n, n);
    out.lambda.resize(n);
    for (int k = 0; k < n; ++k) {
        const int j = order[k];
        out.lambda[k] = lambda[j];
        for (int i = 0; i < n; ++i) out.q(i, k) = q(i, j);
    }
    for (int k = 0; k < n; ++k) {
        int arg = 0;
        double best = -1.0;
        for (int i = 0; i < n; ++i) {
            const double mag = std::fabs(out.q(i, k));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (out.q(arg, k) < 0.0)
            for (int i = 0; i < n; ++i) out.q(i, k) = -out.q(i, k);
    }
    return out;
}

Mat inv_sqrt_exact(const Mat& s, double eps) {
    if (!is_finite(s)) throw InvalidInput("inv_sqrt_exact: non-finite input");
    if (s.rows() != s.cols()) throw ShapeError("inv_sqrt_exact: matrix not square");
    const double asym = max_abs_diff(s, transpose(s));
    if (asym > 1e-10 * std::max(1.0, max_abs(s)))
        throw InvalidInput("inv_sqrt_exact: matrix not symmetric");
    Mat sym = 0.5 * (s + transpose(s));
    const EigResult e = eig_sym(sym);
    const int n = s.rows();
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
        double lam = e.lambda[i];
        if (lam < -1e-8) throw NotPSD("inv_sqrt_exact: negative eigenvalue");
        lam = std::max(lam, 0.0);
        const double shifted = lam + eps;
        if (shifted <= 0.0) throw SingularGram("inv_sqrt_exact: zero eigenvalue with eps=0");
        d[i] = 1.0 / std::sqrt(shifted);
    }
    Mat out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += e.q(i, k) * d[k] * e.q(j, k);
            out(i, j) = acc;
        }
    return out;
}

Norms norms(const Mat& a) {
    if (!is_finite(a)) throw InvalidInput("norms: non-finite input");
    Norms out{};
    out.frobenius = fro_norm(a);
    const SvdResult s = svd(a);
    out.spectral = s.sigma.empty() ? 0.0 : s.sigma[0];
    out.nuclear = 0.0;
    for (double sig : s.sigma) out.nuclear += sig;
    return out;
}

Mat centering_projector(int n) {
    if (n < 1) throw InvalidConfig("centering_projector: n must be >= 1");
    Mat out(n, n);
    const double off = -1.0 / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = (i == j) ? 1.0 + off : off;
    return out;
}

} // namespace symopt
