#include "svpinn/net.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "svpinn/io_util.hpp"
#include "svpinn/math_util.hpp"
#include "svpinn/rng.hpp"

namespace svpinn {

// ---------------------------------------------------------------------------
// Feature maps

FeatureMap make_daff_features(int d, int m, int max_component) {
    FeatureMap fm;
    fm.kind = FeatureKind::Daff;
    fm.d = d;
    fm.indices = select_daff_indices(d, m, max_component);
    return fm;
}

FeatureMap make_fourier_features(int d, int rows, double sigma, std::uint64_t seed) {
    if (rows < 1) throw std::invalid_argument("make_fourier_features: rows must be >= 1");
    FeatureMap fm;
    fm.kind = FeatureKind::Fourier;
    fm.d = d;
    fm.sigma_ff = sigma;
    fm.freq.resize(static_cast<std::size_t>(rows) * d);
    GaussianStream gs(seed, 0x0f0f0f0fULL);
    for (auto& v : fm.freq) v = sigma * gs.next();
    return fm;
}

FeatureMap make_identity_features(int d) {
    FeatureMap fm;
    fm.kind = FeatureKind::Identity;
    fm.d = d;
    return fm;
}

namespace {

// Fills the feature jet of one point into column-major storage: for each
// feature i and channel c, z[i * C + ...] layout is handled by the caller via
// `out(i, c)`. Channels: 0 = value, 1..d = d/dx_a, 1+d..2d = d2/dx_a2.
template <typename Out>
void feature_jet(const FeatureMap& fm, const std::array<double, 3>& x, int channels, Out&& out) {
    const int d = fm.d;
    const bool jets = channels > 1;
    switch (fm.kind) {
        case FeatureKind::Daff: {
            const double amp = std::pow(2.0, 0.5 * d);
            for (std::size_t i = 0; i < fm.indices.size(); ++i) {
                const auto& k = fm.indices[i].k;
                double s[3], c[3];
                for (int a = 0; a < d; ++a) {
                    const double t = static_cast<double>(k[static_cast<std::size_t>(a)]) *
                                     x[static_cast<std::size_t>(a)];
                    s[a] = sin_pi(t);
                    c[a] = cos_pi(t);
                }
                double v = amp;
                for (int a = 0; a < d; ++a) v *= s[a];
                out(i, 0, v);
                if (!jets) continue;
                for (int a = 0; a < d; ++a) {
                    const double ka_pi = kPi * k[static_cast<std::size_t>(a)];
                    double dv = amp * ka_pi * c[a];
                    for (int l = 0; l < d; ++l)
                        if (l != a) dv *= s[l];
                    out(i, 1 + a, dv);
                    out(i, 1 + d + a, -ka_pi * ka_pi * v);
                }
            }
            break;
        }
        case FeatureKind::Fourier: {
            const std::size_t rows = fm.freq.size() / static_cast<std::size_t>(d);
            for (std::size_t fr = 0; fr < rows; ++fr) {
                const double* w = fm.freq.data() + fr * static_cast<std::size_t>(d);
                double t = 0.0;
                for (int a = 0; a < d; ++a) t += w[a] * x[static_cast<std::size_t>(a)];
                const double st = std::sin(t), ct = std::cos(t);
                out(fr, 0, st);
                out(rows + fr, 0, ct);
                if (!jets) continue;
                for (int a = 0; a < d; ++a) {
                    out(fr, 1 + a, w[a] * ct);
                    out(rows + fr, 1 + a, -w[a] * st);
                    out(fr, 1 + d + a, -w[a] * w[a] * st);
                    out(rows + fr, 1 + d + a, -w[a] * w[a] * ct);
                }
            }
            break;
        }
        case FeatureKind::Identity: {
            for (int i = 0; i < d; ++i) {
                out(static_cast<std::size_t>(i), 0, x[static_cast<std::size_t>(i)]);
                if (channels > 1)
                    for (int a = 0; a < d; ++a) {
                        out(static_cast<std::size_t>(i), 1 + a, i == a ? 1.0 : 0.0);
                        out(static_cast<std::size_t>(i), 1 + d + a, 0.0);
                    }
            }
            break;
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Shape and parameters

int NetShape::w_rows(int l) const { return l == hidden ? 1 : width; }
int NetShape::w_cols(int l) const {
    if (hidden == 0) return in_dim;
    return l == 0 ? in_dim : width;
}

NetShape make_shape(int in_dim, int width, int hidden) {
    if (in_dim < 1 || width < 1 || hidden < 0)
        throw std::invalid_argument("make_shape: invalid dimensions");
    NetShape s;
    s.in_dim = in_dim;
    s.width = width;
    s.hidden = hidden;
    std::size_t off = 0;
    auto take = [&off](std::size_t count) {
        const std::size_t at = off;
        off += count;
        return at;
    };
    if (hidden >= 1) {
        s.off_w1 = take(static_cast<std::size_t>(width) * in_dim);
        s.off_b1 = take(static_cast<std::size_t>(width));
        s.off_w2 = take(static_cast<std::size_t>(width) * in_dim);
        s.off_b2 = take(static_cast<std::size_t>(width));
    }
    s.off_w.resize(static_cast<std::size_t>(hidden) + 1);
    s.off_b.resize(static_cast<std::size_t>(hidden) + 1);
    for (int l = 0; l <= hidden; ++l) {
        s.off_w[static_cast<std::size_t>(l)] =
            take(static_cast<std::size_t>(s.w_rows(l)) * static_cast<std::size_t>(s.w_cols(l)));
        s.off_b[static_cast<std::size_t>(l)] = take(static_cast<std::size_t>(s.w_rows(l)));
    }
    s.nparams = off;
    return s;
}

NetworkParams make_network(const FeatureMap& fmap, int width, int hidden, bool hard_boundary) {
    if (hard_boundary && fmap.kind != FeatureKind::Daff)
        throw std::invalid_argument("make_network: hard boundary mode requires Daff features");
    NetworkParams p;
    p.shape = make_shape(fmap.output_dim(), width, hidden);
    p.fmap = fmap;
    p.hard_boundary = hard_boundary;
    p.theta.assign(p.shape.nparams, 0.0);
    return p;
}

void glorot_init(NetworkParams& params, std::uint64_t seed) {
    const NetShape& s = params.shape;
    std::uint64_t matrix_id = 0;
    auto fill = [&](std::size_t off, int rows, int cols) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        GaussianStream gs(seed, 0xa11ce000ULL + matrix_id++);
        for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i)
            params.theta[off + i] = gs.next_uniform_sym(limit);
    };
    if (s.hidden >= 1) {
        fill(s.off_w1, s.width, s.in_dim);
        fill(s.off_w2, s.width, s.in_dim);
    }
    for (int l = 0; l <= s.hidden; ++l)
        fill(s.off_w[static_cast<std::size_t>(l)], s.w_rows(l), s.w_cols(l));
    // Biases start at zero in either mode.
}

std::vector<std::size_t> trainable_indices(const NetworkParams& params) {
    const NetShape& s = params.shape;
    std::vector<std::size_t> idx;
    idx.reserve(s.nparams);
    auto add_range = [&idx](std::size_t off, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) idx.push_back(off + i);
    };
    if (s.hidden >= 1) {
        add_range(s.off_w1, static_cast<std::size_t>(s.width) * s.in_dim);
        if (!params.hard_boundary) add_range(s.off_b1, static_cast<std::size_t>(s.width));
        add_range(s.off_w2, static_cast<std::size_t>(s.width) * s.in_dim);
        if (!params.hard_boundary) add_range(s.off_b2, static_cast<std::size_t>(s.width));
    }
    for (int l = 0; l <= s.hidden; ++l) {
        add_range(s.off_w[static_cast<std::size_t>(l)],
                  static_cast<std::size_t>(s.w_rows(l)) * static_cast<std::size_t>(s.w_cols(l)));
        if (!params.hard_boundary)
            add_range(s.off_b[static_cast<std::size_t>(l)], static_cast<std::size_t>(s.w_rows(l)));
    }
    return idx;
}

// ---------------------------------------------------------------------------
// Single-point reference evaluation (plain loops, row-major weights)

namespace {

struct Triple {
    double v = 0.0;
    std::array<double, 3> d{0, 0, 0};
    std::array<double, 3> s{0, 0, 0};
};

// y = W x (+ b on the value part), propagating all channels linearly.
void lin_ref(const double* W, const double* b, const std::vector<Triple>& x, int rows, int cols,
             int d, std::vector<Triple>& y) {
    y.assign(static_cast<std::size_t>(rows), Triple{});
    for (int i = 0; i < rows; ++i) {
        Triple acc;
        if (b) acc.v = b[i];
        const double* wr = W + static_cast<std::size_t>(i) * cols;
        for (int k = 0; k < cols; ++k) {
            acc.v += wr[k] * x[static_cast<std::size_t>(k)].v;
            for (int a = 0; a < d; ++a) {
                acc.d[static_cast<std::size_t>(a)] += wr[k] * x[static_cast<std::size_t>(k)].d[static_cast<std::size_t>(a)];
                acc.s[static_cast<std::size_t>(a)] += wr[k] * x[static_cast<std::size_t>(k)].s[static_cast<std::size_t>(a)];
            }
        }
        y[static_cast<std::size_t>(i)] = acc;
    }
}

void tanh_ref(std::vector<Triple>& x, int d) {
    for (auto& t : x) {
        const double th = std::tanh(t.v);
        const double dth = 1.0 - th * th;
        const double ddth = -2.0 * th * dth;
        t.v = th;
        for (int a = 0; a < d; ++a) {
            const double din = t.d[static_cast<std::size_t>(a)];
            const double sin_ = t.s[static_cast<std::size_t>(a)];
            t.d[static_cast<std::size_t>(a)] = dth * din;
            t.s[static_cast<std::size_t>(a)] = ddth * din * din + dth * sin_;
        }
    }
}

// g = f*U + (1-f)*V elementwise, with product-rule channels.
void combine_ref(const std::vector<Triple>& f, const std::vector<Triple>& U,
                 const std::vector<Triple>& V, int d, std::vector<Triple>& g) {
    g.assign(f.size(), Triple{});
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Triple& fi = f[i];
        const Triple& ui = U[i];
        const Triple& vi = V[i];
        Triple gi;
        gi.v = fi.v * ui.v + (1.0 - fi.v) * vi.v;
        for (int a = 0; a < d; ++a) {
            const std::size_t aa = static_cast<std::size_t>(a);
            gi.d[aa] = fi.d[aa] * (ui.v - vi.v) + fi.v * ui.d[aa] + (1.0 - fi.v) * vi.d[aa];
            gi.s[aa] = fi.s[aa] * (ui.v - vi.v) + 2.0 * fi.d[aa] * (ui.d[aa] - vi.d[aa]) +
                       fi.v * ui.s[aa] + (1.0 - fi.v) * vi.s[aa];
        }
        g[i] = gi;
    }
}

Triple eval_point(const NetworkParams& params, const std::array<double, 3>& x, bool jets) {
    const NetShape& s = params.shape;
    const int d = jets ? params.fmap.d : 0;
    std::vector<Triple> z(static_cast<std::size_t>(s.in_dim));
    feature_jet(params.fmap, x, jets ? 1 + 2 * params.fmap.d : 1,
                [&](std::size_t i, int c, double v) {
                    if (c == 0)
                        z[i].v = v;
                    else if (c <= params.fmap.d)
                        z[i].d[static_cast<std::size_t>(c - 1)] = v;
                    else
                        z[i].s[static_cast<std::size_t>(c - 1 - params.fmap.d)] = v;
                });
    const double* th = params.theta.data();
    if (s.hidden == 0) {
        std::vector<Triple> out;
        lin_ref(th + s.off_w[0], th + s.off_b[0], z, 1, s.in_dim, d, out);
        return out[0];
    }
    std::vector<Triple> U, V, cur, pre, g;
    lin_ref(th + s.off_w1, th + s.off_b1, z, s.width, s.in_dim, d, U);
    tanh_ref(U, d);
    lin_ref(th + s.off_w2, th + s.off_b2, z, s.width, s.in_dim, d, V);
    tanh_ref(V, d);
    cur = z;
    for (int l = 0; l < s.hidden; ++l) {
        lin_ref(th + s.off_w[static_cast<std::size_t>(l)], th + s.off_b[static_cast<std::size_t>(l)],
                cur, s.width, s.w_cols(l), d, pre);
        tanh_ref(pre, d);
        combine_ref(pre, U, V, d, g);
        cur = g;
    }
    std::vector<Triple> out;
    lin_ref(th + s.off_w[static_cast<std::size_t>(s.hidden)],
            th + s.off_b[static_cast<std::size_t>(s.hidden)], cur, 1, s.width, d, out);
    return out[0];
}

}  // namespace

double forward(const NetworkParams& params, const std::array<double, 3>& x) {
    return eval_point(params, x, false).v;
}

EvalJet eval_jet(const NetworkParams& params, const std::array<double, 3>& x) {
    const Triple t = eval_point(params, x, true);
    EvalJet j;
    j.value = t.v;
    j.grad = t.d;
    j.second = t.s;
    return j;
}

// ---------------------------------------------------------------------------
// Operators

double apply_operator(const OperatorSpec& op, const EvalJet& jet, const std::array<double, 3>& x) {
    double lap = 0.0;
    for (int a = 0; a < op.d; ++a) lap += jet.second[static_cast<std::size_t>(a)];
    switch (op.kind) {
        case OperatorSpec::Kind::NegLaplacian:
            return -lap;
        case OperatorSpec::Kind::Helmholtz:
            return lap + op.k * op.k * jet.value;
        case OperatorSpec::Kind::DivergenceForm: {
            const double av = op.a(x);
            const auto ga = op.grad_a(x);
            double adv = 0.0;
            for (int a = 0; a < op.d; ++a)
                adv += ga[static_cast<std::size_t>(a)] * jet.grad[static_cast<std::size_t>(a)];
            return -av * lap - adv;
        }
    }
    throw std::invalid_argument("apply_operator: unknown operator kind");
}

JetCotangent operator_cotangent(const OperatorSpec& op, const std::array<double, 3>& x, double q) {
    JetCotangent c;
    switch (op.kind) {
        case OperatorSpec::Kind::NegLaplacian:
            for (int a = 0; a < op.d; ++a) c.second[static_cast<std::size_t>(a)] = -q;
            break;
        case OperatorSpec::Kind::Helmholtz:
            for (int a = 0; a < op.d; ++a) c.second[static_cast<std::size_t>(a)] = q;
            c.value = q * op.k * op.k;
            break;
        case OperatorSpec::Kind::DivergenceForm: {
            const double av = op.a(x);
            const auto ga = op.grad_a(x);
            for (int a = 0; a < op.d; ++a) {
                c.second[static_cast<std::size_t>(a)] = -q * av;
                c.grad[static_cast<std::size_t>(a)] = -q * ga[static_cast<std::size_t>(a)];
            }
            break;
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// Blocked evaluator

namespace {

// Column-major weight copy alongside the row-major view.
struct MatView {
    const double* row = nullptr;  // rows x cols, row-major (flat theta)
    std::vector<double> col;      // cols-major copy
    int rows = 0, cols = 0;

    void build(const double* theta, std::size_t off, int r, int c) {
        rows = r;
        cols = c;
        row = theta + off;
        col.resize(static_cast<std::size_t>(r) * c);
        for (int i = 0; i < r; ++i)
            for (int k = 0; k < c; ++k)
                col[static_cast<std::size_t>(k) * r + i] = row[static_cast<std::size_t>(i) * c + k];
    }
};

struct ParamView {
    MatView w1, w2;
    std::vector<MatView> wl;  // hidden + 1
    const double* b1 = nullptr;
    const double* b2 = nullptr;
    std::vector<const double*> bl;

    ParamView(const NetShape& s, const double* theta) {
        if (s.hidden >= 1) {
            w1.build(theta, s.off_w1, s.width, s.in_dim);
            w2.build(theta, s.off_w2, s.width, s.in_dim);
            b1 = theta + s.off_b1;
            b2 = theta + s.off_b2;
        }
        wl.resize(static_cast<std::size_t>(s.hidden) + 1);
        bl.resize(static_cast<std::size_t>(s.hidden) + 1);
        for (int l = 0; l <= s.hidden; ++l) {
            wl[static_cast<std::size_t>(l)].build(theta, s.off_w[static_cast<std::size_t>(l)],
                                                  s.w_rows(l), s.w_cols(l));
            bl[static_cast<std::size_t>(l)] = theta + s.off_b[static_cast<std::size_t>(l)];
        }
    }
};

// Y[r x cols] = W X (+ bias on value channels). Column-major accumulation:
// each output entry gathers contributions in a fixed k order, so the kernel
// is SIMD-friendly without reassociating sums.
void lin_forward(const MatView& W, const double* bias, const double* X, double* Y, int cols,
                 int channels) {
    const int r = W.rows, m = W.cols;
    for (int j = 0; j < cols; ++j) {
        double* y = Y + static_cast<std::size_t>(j) * r;
        if (bias && j % channels == 0) {
            for (int i = 0; i < r; ++i) y[i] = bias[i];
        } else {
            for (int i = 0; i < r; ++i) y[i] = 0.0;
        }
        const double* xj = X + static_cast<std::size_t>(j) * m;
        for (int k = 0; k < m; ++k) {
            const double xk = xj[k];
            const double* wk = W.col.data() + static_cast<std::size_t>(k) * r;
            for (int i = 0; i < r; ++i) y[i] += wk[i] * xk;
        }
    }
}

// cX = W^T cY, gathered over rows of the row-major view.
void lin_backward_x(const MatView& W, const double* cY, double* cX, int cols) {
    const int r = W.rows, m = W.cols;
    for (int j = 0; j < cols; ++j) {
        const double* cy = cY + static_cast<std::size_t>(j) * r;
        double* cx = cX + static_cast<std::size_t>(j) * m;
        for (int k = 0; k < m; ++k) cx[k] = 0.0;
        for (int i = 0; i < r; ++i) {
            const double c = cy[i];
            const double* wr = W.row + static_cast<std::size_t>(i) * m;
            for (int k = 0; k < m; ++k) cx[k] += wr[k] * c;
        }
    }
}

// cW += cY X^T into a column-major gradient buffer; cb += value-channel cY.
void lin_backward_w(const double* cY, const double* X, int r, int m, int cols, int channels,
                    double* cW_col, double* cb) {
    for (int j = 0; j < cols; ++j) {
        const double* cy = cY + static_cast<std::size_t>(j) * r;
        const double* xj = X + static_cast<std::size_t>(j) * m;
        for (int k = 0; k < m; ++k) {
            const double xk = xj[k];
            if (xk == 0.0) continue;
            double* cw = cW_col + static_cast<std::size_t>(k) * r;
            for (int i = 0; i < r; ++i) cw[i] += cy[i] * xk;
        }
        if (cb && j % channels == 0)
            for (int i = 0; i < r; ++i) cb[i] += cy[i];
    }
}

// In-place tanh jet on a [r x cols] buffer; P keeps the pre-activation.
void tanh_forward(const double* P, double* T, int r, int npts, int channels, int d) {
    for (int b = 0; b < npts; ++b) {
        const double* pv = P + static_cast<std::size_t>(b) * channels * r;
        double* tv = T + static_cast<std::size_t>(b) * channels * r;
        for (int i = 0; i < r; ++i) tv[i] = std::tanh(pv[i]);
        for (int a = 0; a < d; ++a) {
            const double* pd = pv + static_cast<std::size_t>(1 + a) * r;
            const double* ps = pv + static_cast<std::size_t>(1 + d + a) * r;
            double* td = tv + static_cast<std::size_t>(1 + a) * r;
            double* ts = tv + static_cast<std::size_t>(1 + d + a) * r;
            for (int i = 0; i < r; ++i) {
                const double t = tv[i];
                const double dt = 1.0 - t * t;
                const double ddt = -2.0 * t * dt;
                td[i] = dt * pd[i];
                ts[i] = ddt * pd[i] * pd[i] + dt * ps[i];
            }
        }
    }
}

// Reverse of tanh_forward. Reads P (pre-activation) and T (activation),
// consumes cT and adds into cP.
void tanh_backward(const double* P, const double* T, const double* cT, double* cP, int r,
                   int npts, int channels, int d) {
    for (int b = 0; b < npts; ++b) {
        const std::size_t base = static_cast<std::size_t>(b) * channels * r;
        const double* pv = P + base;
        const double* tv = T + base;
        const double* ctv = cT + base;
        double* cpv = cP + base;
        for (int i = 0; i < r; ++i) {
            const double t = tv[i];
            const double dt = 1.0 - t * t;
            cpv[i] = ctv[i] * dt;
        }
        for (int a = 0; a < d; ++a) {
            const std::size_t od = static_cast<std::size_t>(1 + a) * r;
            const std::size_t os = static_cast<std::size_t>(1 + d + a) * r;
            for (int i = 0; i < r; ++i) {
                const double t = tv[i];
                const double dt = 1.0 - t * t;
                const double ddt = -2.0 * t * dt;
                const double dddt = -2.0 * dt * dt + 4.0 * t * t * dt;
                const double din = pv[od + i];
                const double sin_ = pv[os + i];
                cpv[i] += ctv[od + i] * ddt * din + ctv[os + i] * (dddt * din * din + ddt * sin_);
                cpv[od + i] = ctv[od + i] * dt + ctv[os + i] * 2.0 * ddt * din;
                cpv[os + i] = ctv[os + i] * dt;
            }
        }
    }
}

void combine_forward(const double* F, const double* U, const double* V, double* G, int r,
                     int npts, int channels, int d) {
    for (int b = 0; b < npts; ++b) {
        const std::size_t base = static_cast<std::size_t>(b) * channels * r;
        const double* fv = F + base;
        const double* uv = U + base;
        const double* vv = V + base;
        double* gv = G + base;
        for (int i = 0; i < r; ++i) gv[i] = fv[i] * uv[i] + (1.0 - fv[i]) * vv[i];
        for (int a = 0; a < d; ++a) {
            const std::size_t od = static_cast<std::size_t>(1 + a) * r;
            const std::size_t os = static_cast<std::size_t>(1 + d + a) * r;
            for (int i = 0; i < r; ++i) {
                const double du = uv[od + i] - vv[od + i];
                gv[od + i] = fv[od + i] * (uv[i] - vv[i]) + fv[i] * uv[od + i] +
                             (1.0 - fv[i]) * vv[od + i];
                gv[os + i] = fv[os + i] * (uv[i] - vv[i]) + 2.0 * fv[od + i] * du +
                             fv[i] * uv[os + i] + (1.0 - fv[i]) * vv[os + i];
            }
        }
    }
}

// Consumes cG; writes cF and accumulates into cU, cV.
void combine_backward(const double* F, const double* U, const double* V, const double* cG,
                      double* cF, double* cU, double* cV, int r, int npts, int channels, int d) {
    for (int b = 0; b < npts; ++b) {
        const std::size_t base = static_cast<std::size_t>(b) * channels * r;
        const double* fv = F + base;
        const double* uv = U + base;
        const double* vv = V + base;
        const double* cg = cG + base;
        double* cf = cF + base;
        double* cu = cU + base;
        double* cv = cV + base;
        for (int i = 0; i < r; ++i) {
            cf[i] = cg[i] * (uv[i] - vv[i]);
            cu[i] += cg[i] * fv[i];
            cv[i] += cg[i] * (1.0 - fv[i]);
        }
        for (int a = 0; a < d; ++a) {
            const std::size_t od = static_cast<std::size_t>(1 + a) * r;
            const std::size_t os = static_cast<std::size_t>(1 + d + a) * r;
            for (int i = 0; i < r; ++i) {
                const double cgd = cg[od + i];
                const double cgs = cg[os + i];
                cf[i] += cgd * (uv[od + i] - vv[od + i]) + cgs * (uv[os + i] - vv[os + i]);
                cf[od + i] = cgd * (uv[i] - vv[i]) + cgs * 2.0 * (uv[od + i] - vv[od + i]);
                cf[os + i] = cgs * (uv[i] - vv[i]);
                cu[i] += cgd * fv[od + i] + cgs * fv[os + i];
                cu[od + i] += cgd * fv[i] + cgs * 2.0 * fv[od + i];
                cu[os + i] += cgs * fv[i];
                cv[i] -= cgd * fv[od + i] + cgs * fv[os + i];
                cv[od + i] += cgd * (1.0 - fv[i]) - cgs * 2.0 * fv[od + i];
                cv[os + i] += cgs * (1.0 - fv[i]);
            }
        }
    }
}

struct BlockBuffers {
    std::vector<double> Z, PU, U, PV, V, OUT;
    std::vector<std::vector<double>> P, F, G;  // per hidden layer
    std::vector<double> cCur, cF, cP, cU, cV, cPrev;

    BlockBuffers(const NetShape& s, int channels, int npts, bool backward) {
        const std::size_t cols = static_cast<std::size_t>(npts) * channels;
        const std::size_t zr = static_cast<std::size_t>(s.in_dim) * cols;
        const std::size_t rr = static_cast<std::size_t>(s.width) * cols;
        Z.assign(zr, 0.0);
        OUT.assign(cols, 0.0);
        if (s.hidden >= 1) {
            PU.assign(rr, 0.0);
            U.assign(rr, 0.0);
            PV.assign(rr, 0.0);
            V.assign(rr, 0.0);
            P.assign(static_cast<std::size_t>(s.hidden), std::vector<double>(rr, 0.0));
            F.assign(static_cast<std::size_t>(s.hidden), std::vector<double>(rr, 0.0));
            G.assign(static_cast<std::size_t>(s.hidden), std::vector<double>(rr, 0.0));
            if (backward) {
                cCur.assign(rr, 0.0);
                cF.assign(rr, 0.0);
                cP.assign(rr, 0.0);
                cU.assign(rr, 0.0);
                cV.assign(rr, 0.0);
                cPrev.assign(std::max(rr, zr), 0.0);
            }
        }
    }
};

// Gradient offsets into a flat buffer where every W block is column-major.
// The layout mirrors NetShape, so the same offsets are reused.
void col_to_row_grad(const NetShape& s, const double* gcol, double* grow) {
    std::memcpy(grow, gcol, s.nparams * sizeof(double));
    auto fix = [&](std::size_t off, int r, int c) {
        for (int i = 0; i < r; ++i)
            for (int k = 0; k < c; ++k)
                grow[off + static_cast<std::size_t>(i) * c + k] =
                    gcol[off + static_cast<std::size_t>(k) * r + i];
    };
    if (s.hidden >= 1) {
        fix(s.off_w1, s.width, s.in_dim);
        fix(s.off_w2, s.width, s.in_dim);
    }
    for (int l = 0; l <= s.hidden; ++l)
        fix(s.off_w[static_cast<std::size_t>(l)], s.w_rows(l), s.w_cols(l));
}

}  // namespace

BlockEvaluator::BlockEvaluator(const NetShape& shape, const FeatureMap& fmap, bool with_jets)
    : shape_(shape), fmap_(fmap), with_jets_(with_jets), channels_(with_jets ? 1 + 2 * fmap.d : 1) {
    if (shape.in_dim != fmap.output_dim())
        throw std::invalid_argument("BlockEvaluator: feature/shape width mismatch");
}

namespace {

void forward_block(const NetShape& s, const FeatureMap& fmap, const ParamView& pv,
                   std::span<const std::array<double, 3>> pts, int channels, BlockBuffers& bb) {
    const int npts = static_cast<int>(pts.size());
    const int cols = npts * channels;
    const int m = s.in_dim;
    const int d = channels > 1 ? fmap.d : 0;
    // Features, column-major per point: column (b*channels + c).
    std::fill(bb.Z.begin(), bb.Z.end(), 0.0);
    for (int b = 0; b < npts; ++b) {
        double* zb = bb.Z.data() + static_cast<std::size_t>(b) * channels * m;
        feature_jet(fmap, pts[static_cast<std::size_t>(b)], channels,
                    [&](std::size_t i, int c, double v) { zb[static_cast<std::size_t>(c) * m + i] = v; });
    }
    if (s.hidden == 0) {
        lin_forward(pv.wl[0], pv.bl[0], bb.Z.data(), bb.OUT.data(), cols, channels);
        return;
    }
    lin_forward(pv.w1, pv.b1, bb.Z.data(), bb.PU.data(), cols, channels);
    tanh_forward(bb.PU.data(), bb.U.data(), s.width, npts, channels, d);
    lin_forward(pv.w2, pv.b2, bb.Z.data(), bb.PV.data(), cols, channels);
    tanh_forward(bb.PV.data(), bb.V.data(), s.width, npts, channels, d);

    const double* cur = bb.Z.data();
    for (int l = 0; l < s.hidden; ++l) {
        auto& Pl = bb.P[static_cast<std::size_t>(l)];
        auto& Fl = bb.F[static_cast<std::size_t>(l)];
        auto& Gl = bb.G[static_cast<std::size_t>(l)];
        lin_forward(pv.wl[static_cast<std::size_t>(l)], pv.bl[static_cast<std::size_t>(l)], cur,
                    Pl.data(), cols, channels);
        tanh_forward(Pl.data(), Fl.data(), s.width, npts, channels, d);
        combine_forward(Fl.data(), bb.U.data(), bb.V.data(), Gl.data(), s.width, npts, channels, d);
        cur = Gl.data();
    }
    lin_forward(pv.wl[static_cast<std::size_t>(s.hidden)], pv.bl[static_cast<std::size_t>(s.hidden)],
                cur, bb.OUT.data(), cols, channels);
}

void backward_block(const NetShape& s, const FeatureMap& fmap, const ParamView& pv,
                    std::span<const std::array<double, 3>> pts,
                    std::span<const JetCotangent> cots, int channels, BlockBuffers& bb,
                    double* gcol) {
    const int npts = static_cast<int>(pts.size());
    const int cols = npts * channels;
    const int d = channels > 1 ? fmap.d : 0;
    const int r = s.width;

    // Cotangent of the readout output per column.
    std::vector<double> cout(static_cast<std::size_t>(cols), 0.0);
    for (int b = 0; b < npts; ++b) {
        const JetCotangent& c = cots[static_cast<std::size_t>(b)];
        cout[static_cast<std::size_t>(b) * channels] = c.value;
        for (int a = 0; a < d; ++a) {
            cout[static_cast<std::size_t>(b) * channels + 1 + a] = c.grad[static_cast<std::size_t>(a)];
            cout[static_cast<std::size_t>(b) * channels + 1 + d + a] = c.second[static_cast<std::size_t>(a)];
        }
    }

    const std::size_t lK = static_cast<std::size_t>(s.hidden);
    if (s.hidden == 0) {
        lin_backward_w(cout.data(), bb.Z.data(), 1, s.in_dim, cols, channels,
                       gcol + s.off_w[0], gcol + s.off_b[0]);
        return;
    }

    // Readout: cG_K = W^T cout.
    const double* gk = bb.G[lK - 1].data();
    lin_backward_w(cout.data(), gk, 1, r, cols, channels, gcol + s.off_w[lK], gcol + s.off_b[lK]);
    lin_backward_x(pv.wl[lK], cout.data(), bb.cCur.data(), cols);

    std::fill(bb.cU.begin(), bb.cU.end(), 0.0);
    std::fill(bb.cV.begin(), bb.cV.end(), 0.0);

    for (int l = s.hidden - 1; l >= 0; --l) {
        const auto& Fl = bb.F[static_cast<std::size_t>(l)];
        const auto& Pl = bb.P[static_cast<std::size_t>(l)];
        const double* in = l == 0 ? bb.Z.data() : bb.G[static_cast<std::size_t>(l - 1)].data();
        combine_backward(Fl.data(), bb.U.data(), bb.V.data(), bb.cCur.data(), bb.cF.data(),
                         bb.cU.data(), bb.cV.data(), r, npts, channels, d);
        tanh_backward(Pl.data(), Fl.data(), bb.cF.data(), bb.cP.data(), r, npts, channels, d);
        lin_backward_w(bb.cP.data(), in, r, s.w_cols(l), cols, channels,
                       gcol + s.off_w[static_cast<std::size_t>(l)],
                       gcol + s.off_b[static_cast<std::size_t>(l)]);
        if (l > 0) {
            lin_backward_x(pv.wl[static_cast<std::size_t>(l)], bb.cP.data(), bb.cPrev.data(), cols);
            std::swap(bb.cCur, bb.cPrev);
        }
    }

    // Encoders receive cotangent from every layer through U and V.
    tanh_backward(bb.PU.data(), bb.U.data(), bb.cU.data(), bb.cP.data(), r, npts, channels, d);
    lin_backward_w(bb.cP.data(), bb.Z.data(), r, s.in_dim, cols, channels, gcol + s.off_w1,
                   gcol + s.off_b1);
    tanh_backward(bb.PV.data(), bb.V.data(), bb.cV.data(), bb.cP.data(), r, npts, channels, d);
    lin_backward_w(bb.cP.data(), bb.Z.data(), r, s.in_dim, cols, channels, gcol + s.off_w2,
                   gcol + s.off_b2);
}

}  // namespace

void BlockEvaluator::evaluate(const NetworkParams& params,
                              std::span<const std::array<double, 3>> points,
                              std::vector<EvalJet>& jets_out) const {
    const ParamView pv(shape_, params.theta.data());
    const std::size_t npts = points.size();
    jets_out.assign(npts, EvalJet{});
    const std::size_t nblocks = (npts + kBlock - 1) / kBlock;
    const int d = with_jets_ ? fmap_.d : 0;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(nblocks); ++bi) {
        const std::size_t lo = static_cast<std::size_t>(bi) * kBlock;
        const std::size_t hi = std::min(lo + kBlock, npts);
        const int bn = static_cast<int>(hi - lo);
        BlockBuffers bb(shape_, channels_, bn, false);
        forward_block(shape_, fmap_, pv, points.subspan(lo, hi - lo), channels_, bb);
        for (int b = 0; b < bn; ++b) {
            EvalJet& j = jets_out[lo + static_cast<std::size_t>(b)];
            j.value = bb.OUT[static_cast<std::size_t>(b) * channels_];
            for (int a = 0; a < d; ++a) {
                j.grad[static_cast<std::size_t>(a)] =
                    bb.OUT[static_cast<std::size_t>(b) * channels_ + 1 + a];
                j.second[static_cast<std::size_t>(a)] =
                    bb.OUT[static_cast<std::size_t>(b) * channels_ + 1 + d + a];
            }
        }
    }
}

// TODO: optionally reuse activations from a preceding evaluate() call for
// the same parameters; the fused re-forward below costs roughly a quarter of
// a training step but keeps the per-block memory footprint flat.
void BlockEvaluator::accumulate_gradient(const NetworkParams& params,
                                         std::span<const std::array<double, 3>> points,
                                         std::span<const JetCotangent> cotangents,
                                         std::span<double> grad) const {
    if (grad.size() != shape_.nparams)
        throw std::invalid_argument("accumulate_gradient: grad size mismatch");
    if (cotangents.size() != points.size())
        throw std::invalid_argument("accumulate_gradient: cotangent count mismatch");

    const ParamView pv(shape_, params.theta.data());
    const std::size_t npts = points.size();
    const std::size_t nblocks = (npts + kBlock - 1) / kBlock;
    const std::size_t ngroups = std::min<std::size_t>(kGroups, std::max<std::size_t>(nblocks, 1));
    const std::size_t blocks_per_group = (nblocks + ngroups - 1) / ngroups;

    // One partial gradient per group, combined in group order afterwards, so
    // the result is independent of thread count.
    std::vector<std::vector<double>> partial(ngroups);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(ngroups); ++g) {
        auto& gcol = partial[static_cast<std::size_t>(g)];
        gcol.assign(shape_.nparams, 0.0);
        const std::size_t b0 = static_cast<std::size_t>(g) * blocks_per_group;
        const std::size_t b1 = std::min(b0 + blocks_per_group, nblocks);
        for (std::size_t bi = b0; bi < b1; ++bi) {
            const std::size_t lo = bi * kBlock;
            const std::size_t hi = std::min(lo + kBlock, npts);
            const int bn = static_cast<int>(hi - lo);
            BlockBuffers bb(shape_, channels_, bn, true);
            forward_block(shape_, fmap_, pv, points.subspan(lo, hi - lo), channels_, bb);
            backward_block(shape_, fmap_, pv, points.subspan(lo, hi - lo),
                           cotangents.subspan(lo, hi - lo), channels_, bb, gcol.data());
        }
    }

    std::vector<double> total(shape_.nparams, 0.0);
    for (std::size_t g = 0; g < ngroups; ++g)
        for (std::size_t i = 0; i < shape_.nparams; ++i) total[i] += partial[g][i];

    std::vector<double> row(shape_.nparams);
    col_to_row_grad(shape_, total.data(), row.data());
    for (std::size_t i = 0; i < shape_.nparams; ++i) grad[i] += row[i];
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr std::uint64_t kCheckpointMagic = 0x5356504e45543031ULL;  // "SVPNET01"
}

void save_checkpoint(const NetworkParams& params, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    FileCloser closer{f};
    write_u64_le(f, kCheckpointMagic);
    write_u64_le(f, 1);  // format version
    write_u64_le(f, static_cast<std::uint64_t>(params.fmap.kind));
    write_u64_le(f, static_cast<std::uint64_t>(params.fmap.d));
    if (params.fmap.kind == FeatureKind::Daff) {
        write_u64_le(f, params.fmap.indices.size());
        for (const auto& idx : params.fmap.indices)
            for (int j = 0; j < params.fmap.d; ++j)
                write_u64_le(f, static_cast<std::uint64_t>(idx.k[static_cast<std::size_t>(j)]));
    } else if (params.fmap.kind == FeatureKind::Fourier) {
        write_u64_le(f, params.fmap.freq.size() / static_cast<std::size_t>(params.fmap.d));
        write_f64_le(f, params.fmap.sigma_ff);
        for (double v : params.fmap.freq) write_f64_le(f, v);
    }
    write_u64_le(f, static_cast<std::uint64_t>(params.shape.width));
    write_u64_le(f, static_cast<std::uint64_t>(params.shape.hidden));
    write_u64_le(f, params.hard_boundary ? 1 : 0);
    write_u64_le(f, params.shape.nparams);
    for (double v : params.theta) write_f64_le(f, v);
}

NetworkParams load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    FileCloser closer{f};
    if (read_u64_le(f) != kCheckpointMagic)
        throw std::runtime_error("load_checkpoint: bad magic");
    if (read_u64_le(f) != 1) throw std::runtime_error("load_checkpoint: unsupported version");
    FeatureMap fm;
    fm.kind = static_cast<FeatureKind>(read_u64_le(f));
    fm.d = static_cast<int>(read_u64_le(f));
    if (fm.kind == FeatureKind::Daff) {
        const std::size_t m = read_u64_le(f);
        fm.indices.resize(m);
        for (auto& idx : fm.indices) {
            idx.d = fm.d;
            for (int j = 0; j < fm.d; ++j)
                idx.k[static_cast<std::size_t>(j)] = static_cast<int>(read_u64_le(f));
        }
    } else if (fm.kind == FeatureKind::Fourier) {
        const std::size_t rows = read_u64_le(f);
        fm.sigma_ff = read_f64_le(f);
        fm.freq.resize(rows * static_cast<std::size_t>(fm.d));
        for (auto& v : fm.freq) v = read_f64_le(f);
    }
    const int width = static_cast<int>(read_u64_le(f));
    const int hidden = static_cast<int>(read_u64_le(f));
    const bool hard = read_u64_le(f) != 0;
    NetworkParams p = make_network(fm, width, hidden, hard);
    const std::uint64_t nparams = read_u64_le(f);
    if (nparams != p.shape.nparams)
        throw std::runtime_error("load_checkpoint: parameter count mismatch");
    for (auto& v : p.theta) v = read_f64_le(f);
    return p;
}

}  // namespace svpinn
