#include "symopt/polar_iter.hpp"

#include <cmath>

#include "symopt/errors.hpp"

namespace symopt {

namespace {
constexpr double kNormalizerSlack = 1.02; // fixed, not configurable
}

CoeffTriple CoeffTable::at(int k) const {
    if (triples.empty()) throw InvalidConfig("CoeffTable: empty table");
    const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(k), triples.size() - 1);
    return triples[idx];
}

CoeffTable CoeffTable::baseline_cubic() { return CoeffTable{{{1.5, -0.5, 0.0}}}; }

std::pair<Mat, IterReport> ns_polar(const Mat& a, const CoeffTable& coeffs, int steps) {
    if (!is_finite(a)) throw InvalidInput("ns_polar: non-finite input");
    if (is_zero(a)) throw ZeroDirection("ns_polar: zero matrix has no polar factor");
    if (steps < 1) throw InvalidConfig("ns_polar: steps must be >= 1");
    if (a.rows() < a.cols()) {
        auto [xt, rep] = ns_polar(transpose(a), coeffs, steps);
        return {transpose(xt), rep};
    }
    const double alpha = kNormalizerSlack * fro_norm(a);
    Mat x = (1.0 / alpha) * a;
    for (int k = 0; k < steps; ++k) {
        const CoeffTriple cf = coeffs.at(k);
        const Mat s = transpose(x) * x;
        Mat next = cf.a * x;
        const Mat xs = x * s;
        next += cf.b * xs;
        if (cf.c != 0.0) next += cf.c * (xs * s);
        x = std::move(next);
    }
    IterReport rep;
    rep.steps_used = steps;
    rep.normalizer = alpha;
    rep.residual = fro_norm(transpose(x) * x - Mat::identity(x.cols()));
    return {std::move(x), rep};
}

std::pair<Mat, IterReport> polar_express_inv_sqrt(const Mat& a, const CoeffTable& coeffs, int steps,
                                                  double eps, bool symmetrize_residual) {
    if (!is_finite(a)) throw InvalidInput("polar_express_inv_sqrt: non-finite input");
    if (a.rows() != a.cols()) throw ShapeError("polar_express_inv_sqrt: matrix not square");
    if (steps < 1) throw InvalidConfig("polar_express_inv_sqrt: steps must be >= 1");
    const int n = a.rows();

    Mat sym = 0.5 * (a + transpose(a));
    for (int i = 0; i < n; ++i) sym(i, i) += eps;
    const double alpha = kNormalizerSlack * fro_norm(sym) + eps;
    if (alpha == 0.0) throw ZeroDirection("polar_express_inv_sqrt: zero matrix with eps=0");

    Mat y = (1.0 / alpha) * sym;
    Mat z = Mat::identity(n);
    const Mat ident = Mat::identity(n);
    for (int k = 0; k < steps; ++k) {
        const CoeffTriple cf = coeffs.at(k);
        const double ab = cf.a + cf.b + cf.c;
        const double bb = -cf.b - 2.0 * cf.c;
        const double cb = cf.c;
        Mat r = ident - z * y;
        if (symmetrize_residual) r = 0.5 * (r + transpose(r));
        Mat m = ab * ident;
        m += bb * r;
        if (cb != 0.0) m += cb * (r * r);
        y = y * m;
        z = m * z;
    }
    Mat out = (1.0 / std::sqrt(alpha)) * z;
    IterReport rep;
    rep.steps_used = steps;
    rep.normalizer = alpha;
    rep.residual = fro_norm(out * sym * out - ident);
    return {std::move(out), rep};
}

std::pair<Mat, IterReport> gram_newton_schulz(const Mat& m, const CoeffTable& coeffs, int steps, double eps) {
    if (!is_finite(m)) throw InvalidInput("gram_newton_schulz: non-finite input");
    if (is_zero(m)) throw ZeroDirection("gram_newton_schulz: zero matrix");
    if (m.rows() < m.cols()) {
        auto [xt, rep] = gram_newton_schulz(transpose(m), coeffs, steps, eps);
        return {transpose(xt), rep};
    }
    const Mat gram = transpose(m) * m;
    auto [z, rep] = polar_express_inv_sqrt(gram, coeffs, steps, eps);
    return {m * z, rep};
}

} // namespace symopt
