#include <doctest.h>

#include <cmath>
#include <numeric>

#include "graphtcn/efgat.hpp"
#include "graphtcn/errors.hpp"
#include "support.hpp"

using namespace gtcn;
using test::bit_equal;
using test::uniform;

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, rows x cols

// ---- scalar oracle: one GAL on one time step, plain loops over std::vector ----

Mat to_mat(const Tensor& t) {
    const std::size_t cols = t.shape().back();
    const std::size_t rows = t.size() / cols;
    Mat m(rows, Vec(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m[r][c] = t.values()[r * cols + c];
    return m;
}

double lrelu(double x, double s = 0.2) { return x > 0 ? x : s * x; }

Vec affine_row(const Vec& x, const Mat& W, const Vec& b) {
    Vec y(b);
    for (std::size_t j = 0; j < y.size(); ++j)
        for (std::size_t i = 0; i < x.size(); ++i) y[j] += x[i] * W[i][j];
    return y;
}

double dot_col(const Vec& x, const Mat& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i][0];
    return s;
}

struct OracleHead {
    Mat w_src, w_dst, w_edge, W_h;
    Vec b_h;
};

struct OracleGal {
    bool edges = true;
    Mat edge_W;
    Vec edge_b;
    std::vector<OracleHead> heads;
    Mat res_W;
    Vec res_b;
};

OracleGal oracle_of(const GalParams& p) {
    OracleGal o;
    o.edges = p.edge_W.has_value();
    if (o.edges) {
        o.edge_W = to_mat(*p.edge_W);
        o.edge_b = p.edge_b->values();
    }
    for (const auto& h : p.heads)
        o.heads.push_back({to_mat(h.w_src), to_mat(h.w_dst), h.w_edge ? to_mat(*h.w_edge) : Mat{}, to_mat(h.W_h),
                           h.b_h.values()});
    o.res_W = to_mat(*p.res_W);
    o.res_b = p.res_b->values();
    return o;
}

// Returns outputs [N][K*F1] and fills alpha[k][i][j].
Mat oracle_gal(const Mat& h, const Mat& pos, const OracleGal& g, std::vector<Mat>* alpha_out = nullptr) {
    const std::size_t n = h.size();
    Mat out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = affine_row(h[i], g.res_W, g.res_b);
    std::size_t offset = 0;
    for (const auto& head : g.heads) {
        Mat alpha(n, Vec(n));
        for (std::size_t i = 0; i < n; ++i) {
            Vec e(n);
            for (std::size_t j = 0; j < n; ++j) {
                double logit = dot_col(h[i], head.w_src) + dot_col(h[j], head.w_dst);
                if (g.edges) {
                    const Vec a = affine_row({pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]}, g.edge_W, g.edge_b);
                    logit += dot_col(a, head.w_edge);
                }
                e[j] = lrelu(logit);
            }
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) total += std::exp(e[j]);
            for (std::size_t j = 0; j < n; ++j) alpha[i][j] = std::exp(e[j]) / total;
        }
        const std::size_t f1 = head.b_h.size();
        Mat gate(n);
        for (std::size_t j = 0; j < n; ++j) {
            const Vec u = affine_row(h[j], head.W_h, head.b_h);
            gate[j].resize(f1);
            for (std::size_t c = 0; c < f1; ++c) gate[j][c] = std::tanh(u[c]) * u[c];
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < f1; ++c) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) s += alpha[i][j] * gate[j][c];
                out[i][offset + c] += lrelu(s);
            }
        offset += f1;
        if (alpha_out) alpha_out->push_back(alpha);
    }
    return out;
}

EfgatParams make_efgat(ParameterStore& store, std::size_t embed, GalConfig g1, GalConfig g2, const GalOptions& opts,
                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    EfgatParams p;
    p.embed_W = store.add("embed.W", glorot_uniform({4, embed}, 4, embed, rng));
    p.embed_b = store.add("embed.b", uniform(rng, {embed}, -0.1, 0.1));
    p.gal1 = register_gal(store, "gal1", embed, g1, opts, rng);
    p.gal2 = register_gal(store, "gal2", g1.out_width(), g2, opts, rng);
    // nonzero biases exercise every term
    for (auto& e : store)
        if (e.name.ends_with(".b") || e.name.ends_with(".b_h"))
            for (auto& v : e.value.data()) v = std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
    return p;
}

Tensor rows_to_tensor(const Mat& m) {
    Vec flat;
    for (const auto& r : m) flat.insert(flat.end(), r.begin(), r.end());
    return Tensor({m.size(), m[0].size()}, flat);
}

double max_diff(const Mat& a, const Tensor& b) {
    double d = 0.0;
    const std::size_t cols = a[0].size();
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c) d = std::max(d, std::abs(a[r][c] - b.values()[r * cols + c]));
    return d;
}

GalHeadParams zero_head(std::size_t in, std::size_t f1) {
    return {Tensor::zeros({in, 1}), Tensor::zeros({in, 1}), Tensor::zeros({f1, 1}), Tensor::zeros({in, f1}),
            Tensor::zeros({f1}), std::nullopt, std::nullopt};
}

}  // namespace

TEST_CASE("edge features") {
    SUBCASE("coincident pedestrians map to the bias") {
        const Tensor pos = Tensor::matrix({{1.5, -2}, {1.5, -2}});
        const Tensor b = Tensor::vector({0.25, -1, 3});
        const Tensor a = compute_edge_features(pos, Tensor::matrix({{1, 2, 3}, {4, 5, 6}}), b);
        CHECK(a.shape() == Shape{2, 2, 3});
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(a.at({0, 1, c}) == b.values()[c]);
            CHECK(a.at({1, 1, c}) == b.values()[c]);
        }
    }
    SUBCASE("raw displacements are antisymmetric") {
        std::mt19937_64 rng(1);
        const Tensor d = pairwise_displacements(uniform(rng, {5, 2}));
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                for (std::size_t c = 0; c < 2; ++c) CHECK(d.at({i, j, c}) == -d.at({j, i, c}));
    }
    SUBCASE("hand evaluation") {
        const Tensor pos = Tensor::matrix({{3, 1}, {1, 0}});
        const Tensor a = compute_edge_features(pos, Tensor::matrix({{1, 0}, {0, 1}}), Tensor::zeros({2}));
        CHECK(a.at({0, 1, 0}) == 2.0);
        CHECK(a.at({0, 1, 1}) == 1.0);
        CHECK(a.at({1, 0, 0}) == -2.0);
    }
}

TEST_CASE("attention coefficients") {
    SUBCASE("single node attends to itself") {
        std::mt19937_64 rng(2);
        GalHeadParams h{uniform(rng, {3, 1}), uniform(rng, {3, 1}), uniform(rng, {2, 1}), uniform(rng, {3, 2}),
                        uniform(rng, {2}), std::nullopt, std::nullopt};
        const Tensor a = attention_coefficients(uniform(rng, {1, 3}), uniform(rng, {1, 1, 2}), h, Mask::all({1, 1}));
        CHECK(a.values() == std::vector<double>{1.0});
    }
    SUBCASE("zero parameters give uniform rows") {
        std::mt19937_64 rng(3);
        const Tensor a = attention_coefficients(uniform(rng, {4, 3}), uniform(rng, {4, 4, 2}), zero_head(3, 2),
                                                Mask::all({4, 4}));
        for (double v : a.values()) CHECK(v == 0.25);
        Mask partial{{4, 4}, std::vector<std::uint8_t>(16, 1)};
        partial.keep[1] = partial.keep[2] = 0;
        const Tensor b = attention_coefficients(uniform(rng, {4, 3}), uniform(rng, {4, 4, 2}), zero_head(3, 2), partial);
        CHECK(b.at({0, 0}) == 0.5);
        CHECK(b.at({0, 1}) == 0.0);
        CHECK(b.at({0, 3}) == 0.5);
    }
    SUBCASE("two nodes by direct evaluation, asymmetric") {
        const Tensor h = Tensor::matrix({{0.5, -1.0}, {2.0, 0.25}});
        const Tensor edge_W = Tensor::matrix({{0.3, -0.2}, {0.1, 0.4}});
        const Tensor edge_b = Tensor::vector({0.05, -0.05});
        const Tensor pos = Tensor::matrix({{1.0, 2.0}, {-0.5, 0.0}});
        GalHeadParams head{Tensor({2, 1}, {0.2, -0.1}), Tensor({2, 1}, {-0.3, 0.25}), Tensor({2, 1}, {0.7, -0.4}),
                           Tensor::zeros({2, 2}), Tensor::zeros({2}), std::nullopt, std::nullopt};
        const Tensor a = attention_coefficients(h, compute_edge_features(pos, edge_W, edge_b), head, Mask::all({2, 2}));

        auto e = [&](int i, int j) {
            const double hi[2][2] = {{0.5, -1.0}, {2.0, 0.25}};
            const double p[2][2] = {{1.0, 2.0}, {-0.5, 0.0}};
            const double dx = p[i][0] - p[j][0], dy = p[i][1] - p[j][1];
            const double a0 = dx * 0.3 + dy * 0.1 + 0.05, a1 = dx * -0.2 + dy * 0.4 - 0.05;
            const double s = hi[i][0] * 0.2 + hi[i][1] * -0.1 + hi[j][0] * -0.3 + hi[j][1] * 0.25 + a0 * 0.7 + a1 * -0.4;
            return lrelu(s);
        };
        for (int i = 0; i < 2; ++i) {
            const double z = std::exp(e(i, 0)) + std::exp(e(i, 1));
            for (int j = 0; j < 2; ++j)
                CHECK(a.at({std::size_t(i), std::size_t(j)}) == doctest::Approx(std::exp(e(i, j)) / z).epsilon(1e-14));
        }
        CHECK(std::abs(a.at({0, 1}) - a.at({1, 0})) > 1e-3);
    }
    SUBCASE("empty neighborhood") {
        Mask none{{2, 2}, {1, 1, 0, 0}};
        CHECK_THROWS_AS(attention_coefficients(Tensor::zeros({2, 3}), std::nullopt, zero_head(3, 2), none),
                        InvalidNeighborhoodError);
    }
}

TEST_CASE("gated node transform") {
    GalHeadParams h = zero_head(1, 1);
    CHECK(gated_node_transform(Tensor::matrix({{5.0}}), h).item() == 0.0);
    h.W_h = Tensor::matrix({{1.0}});
    CHECK(gated_node_transform(Tensor::matrix({{1.0}}), h).item() == doctest::Approx(0.7615941559557649).epsilon(1e-15));
    const double big = gated_node_transform(Tensor::matrix({{40.0}}), h).item();
    CHECK(big == doctest::Approx(40.0).epsilon(1e-12));
    SUBCASE("separate value transform") {
        h.W_v = Tensor::matrix({{2.0}});
        h.b_v = Tensor::vector({1.0});
        CHECK(gated_node_transform(Tensor::matrix({{1.0}}), h).item() == doctest::Approx(std::tanh(1.0) * 3.0));
    }
}

TEST_CASE("gal_forward") {
    SUBCASE("single node with zero gate and zero residual") {
        GalParams p;
        p.edge_W = Tensor::zeros({2, 3});
        p.edge_b = Tensor::zeros({3});
        p.heads.push_back(zero_head(4, 3));
        p.res_W = Tensor::zeros({4, 3});
        p.res_b = Tensor::zeros({3});
        std::mt19937_64 rng(4);
        const Tensor out = gal_forward(uniform(rng, {1, 4}), uniform(rng, {1, 2}), p, {});
        CHECK(out.values() == std::vector<double>(3, 0.0));
    }
    SUBCASE("uniform attention over identical gates") {
        std::mt19937_64 rng(5);
        GalParams p;
        p.edge_W = uniform(rng, {2, 3});
        p.edge_b = uniform(rng, {3});
        GalHeadParams head = zero_head(4, 3);
        head.b_h = Tensor::vector({0.5, -1.5, 2.0});
        p.heads.push_back(head);
        p.res_W = Tensor::zeros({4, 3});
        p.res_b = Tensor::zeros({3});
        for (std::size_t n : {1, 3, 7}) {
            const Tensor out = gal_forward(uniform(rng, {n, 4}), uniform(rng, {n, 2}), p, {});
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < 3; ++c) {
                    const double u = head.b_h.values()[c];
                    CHECK(out.at({i, c}) == doctest::Approx(lrelu(std::tanh(u) * u)).epsilon(1e-14));
                }
        }
    }
    SUBCASE("matches the scalar oracle") {
        std::mt19937_64 rng(6);
        ParameterStore store;
        const GalParams p = register_gal(store, "g", 3, GalConfig{2, 2}, {}, rng);
        for (auto& e : store)
            for (auto& v : e.value.data()) v = std::uniform_real_distribution<double>(-0.8, 0.8)(rng);
        for (std::size_t n : {1, 2, 5}) {
            const Tensor h = uniform(rng, {n, 3});
            const Tensor pos = uniform(rng, {n, 2}, -5, 5);
            std::vector<Tensor> att;
            const Tensor out = gal_forward(h, pos, p, {}, &att);
            std::vector<Mat> alpha;
            const Mat expected = oracle_gal(to_mat(h), to_mat(pos), oracle_of(p), &alpha);
            CHECK(max_diff(expected, out) < 1e-12);
            REQUIRE(att.size() == 2);
            for (std::size_t k = 0; k < 2; ++k) CHECK(max_diff(alpha[k], att[k]) < 1e-12);
        }
    }
    SUBCASE("identity residual") {
        std::mt19937_64 rng(7);
        ParameterStore store;
        GalOptions opts;
        opts.residual_identity = true;
        const GalParams p = register_gal(store, "g", 4, GalConfig{2, 2}, opts, rng);
        CHECK_FALSE(p.res_W.has_value());
        CHECK_FALSE(store.contains("g.res.W"));
        GalParams zeroed = p;
        for (auto& h : zeroed.heads) h = zero_head(4, 2);
        const Tensor x = uniform(rng, {3, 4});
        CHECK(bit_equal(gal_forward(x, uniform(rng, {3, 2}), zeroed, opts), add(Tensor::zeros({3, 4}), x)));
    }
}

TEST_CASE("efgat_forward") {
    const GalOptions opts;
    SUBCASE("single pedestrian attention is all ones") {
        ParameterStore store;
        const auto p = make_efgat(store, 8, {2, 3}, {1, 4}, opts, 1);
        std::mt19937_64 rng(1);
        const auto out = efgat_forward(uniform(rng, {1, 5, 4}), uniform(rng, {1, 5, 2}), p, opts, true);
        CHECK(out.h.shape() == Shape{1, 5, 4});
        REQUIRE(out.attention.layers.size() == 2);
        CHECK(out.attention.layers[0].shape() == Shape{2, 5, 1, 1});
        CHECK(out.attention.layers[1].shape() == Shape{1, 5, 1, 1});
        for (const auto& l : out.attention.layers)
            for (double v : l.values()) CHECK(v == 1.0);
    }
    SUBCASE("identical steps give identical outputs") {
        ParameterStore store;
        const auto p = make_efgat(store, 8, {2, 3}, {1, 4}, opts, 2);
        std::mt19937_64 rng(2);
        Tensor f = uniform(rng, {3, 4, 4});
        Tensor x = uniform(rng, {3, 4, 2});
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t c = 0; c < 4; ++c) f.data()[(i * 4 + 2) * 4 + c] = f.data()[(i * 4 + 0) * 4 + c];
            for (std::size_t c = 0; c < 2; ++c) x.data()[(i * 4 + 2) * 2 + c] = x.data()[(i * 4 + 0) * 2 + c];
        }
        const Tensor h = efgat_forward(f, x, p, opts).h;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t c = 0; c < 4; ++c) CHECK(h.at({i, 0, c}) == h.at({i, 2, c}));
    }
    SUBCASE("step t depends only on step t") {
        ParameterStore store;
        const auto p = make_efgat(store, 8, {2, 3}, {1, 4}, opts, 3);
        std::mt19937_64 rng(3);
        const Tensor f = uniform(rng, {3, 4, 4}), x = uniform(rng, {3, 4, 2});
        Tensor f2 = f.clone(), x2 = x.clone();
        for (std::size_t i = 0; i < 3; ++i) {
            f2.data()[(i * 4 + 1) * 4] += 3.0;
            x2.data()[(i * 4 + 1) * 2] -= 2.0;
        }
        const Tensor a = efgat_forward(f, x, p, opts).h, b = efgat_forward(f2, x2, p, opts).h;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t t : {0, 2, 3})
                for (std::size_t c = 0; c < 4; ++c) CHECK(a.at({i, t, c}) == b.at({i, t, c}));
    }
    SUBCASE("two layers against the scalar oracle") {
        ParameterStore store;
        const auto p = make_efgat(store, 4, {1, 4}, {1, 4}, opts, 4);
        std::mt19937_64 rng(4);
        const Tensor f = uniform(rng, {2, 2, 4}), x = uniform(rng, {2, 2, 2}, -3, 3);
        const Tensor h = efgat_forward(f, x, p, opts).h;
        const auto g1 = oracle_of(p.gal1), g2 = oracle_of(p.gal2);
        const Mat W = to_mat(p.embed_W);
        for (std::size_t t = 0; t < 2; ++t) {
            Mat nodes, pos;
            for (std::size_t i = 0; i < 2; ++i) {
                Vec fi(4);
                for (std::size_t c = 0; c < 4; ++c) fi[c] = f.at({i, t, c});
                nodes.push_back(affine_row(fi, W, p.embed_b.values()));
                pos.push_back({x.at({i, t, 0}), x.at({i, t, 1})});
            }
            const Mat out = oracle_gal(oracle_gal(nodes, pos, g1), pos, g2);
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(out[i][c] - h.at({i, t, c})) < 1e-12);
        }
    }
}

TEST_CASE("attention rows sum to one on random instances") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> pick_n(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        ParameterStore store;
        const auto p = make_efgat(store, 6, {2, 3}, {1, 3}, {}, static_cast<std::uint64_t>(trial));
        const std::size_t n = pick_n(rng);
        const auto out = efgat_forward(uniform(rng, {n, 3, 4}, -10, 10), uniform(rng, {n, 3, 2}, -10, 10), p, {}, true);
        for (const auto& layer : out.attention.layers) {
            const std::size_t rows = layer.size() / n;
            for (std::size_t r = 0; r < rows; ++r) {
                double total = 0.0;
                for (std::size_t j = 0; j < n; ++j) total += layer.values()[r * n + j];
                CHECK(std::abs(total - 1.0) <= 1e-9);
            }
        }
    }
}

TEST_CASE("permutation equivariance") {
    ParameterStore store;
    const auto p = make_efgat(store, 8, {2, 4}, {1, 8}, {}, 11);
    std::mt19937_64 rng(11);
    const std::size_t n = 6, t = 4;
    const Tensor f = uniform(rng, {n, t, 4}), x = uniform(rng, {n, t, 2}, -5, 5);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor fp = f.clone(), xp = x.clone();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < t * 4; ++k) fp.data()[i * t * 4 + k] = f.values()[perm[i] * t * 4 + k];
        for (std::size_t k = 0; k < t * 2; ++k) xp.data()[i * t * 2 + k] = x.values()[perm[i] * t * 2 + k];
    }
    const auto a = efgat_forward(f, x, p, {}, true), b = efgat_forward(fp, xp, p, {}, true);
    const std::size_t w = a.h.extent(2);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < t * w; ++k)
            worst = std::max(worst, std::abs(b.h.values()[i * t * w + k] - a.h.values()[perm[i] * t * w + k]));
    CHECK(worst <= 1e-12);
    for (std::size_t l = 0; l < 2; ++l) {
        const Tensor& A = a.attention.layers[l];
        const Tensor& B = b.attention.layers[l];
        for (std::size_t hs = 0; hs < A.extent(0); ++hs)
            for (std::size_t s = 0; s < t; ++s)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        CHECK(std::abs(B.at({hs, s, i, j}) - A.at({hs, s, perm[i], perm[j]})) <= 1e-12);
    }
}

TEST_CASE("translation invariance of the edge path") {
    std::mt19937_64 rng(12);
    ParameterStore store;
    const GalParams p = register_gal(store, "g", 5, GalConfig{2, 3}, {}, rng);
    const Tensor pos = test::dyadic(rng, {4, 4, 2});
    Tensor moved = pos.clone();
    for (std::size_t k = 0; k < moved.size(); ++k) moved.data()[k] += (k % 2 ? -3.375 : 12.5);
    CHECK(bit_equal(pairwise_displacements(pos), pairwise_displacements(moved)));
    CHECK(bit_equal(compute_edge_features(pos, *p.edge_W, *p.edge_b), compute_edge_features(moved, *p.edge_W, *p.edge_b)));
    const Tensor h = uniform(rng, {4, 4, 5});
    std::vector<Tensor> a1, a2;
    CHECK(bit_equal(gal_forward(h, pos, p, {}, &a1), gal_forward(h, moved, p, {}, &a2)));
    CHECK(bit_equal(a1[0], a2[0]));
}

TEST_CASE("plain GAT ignores positions") {
    std::mt19937_64 rng(13);
    ParameterStore store;
    GalOptions opts;
    opts.edge_features = false;
    const GalParams p = register_gal(store, "g", 5, GalConfig{2, 3}, opts, rng);
    CHECK_FALSE(store.contains("g.edge.W"));
    CHECK_FALSE(store.contains("g.head0.w_edge"));
    const Tensor h = uniform(rng, {3, 5});
    const Tensor pos = uniform(rng, {3, 2});
    Tensor moved = pos.clone();
    moved.data()[2] += 4.0;
    moved.data()[3] -= 1.0;
    CHECK(bit_equal(gal_forward(h, pos, p, opts), gal_forward(h, moved, p, opts)));
}

TEST_CASE("parameter registration") {
    std::mt19937_64 rng(14);
    ParameterStore store;
    GalOptions opts;
    opts.separate_gate = true;
    register_gal(store, "gal1", 64, GalConfig{2, 16}, opts, rng);
    CHECK(store.get("gal1.edge.W").shape() == Shape{2, 16});
    CHECK(store.get("gal1.head1.W_v").shape() == Shape{64, 16});
    CHECK(store.get("gal1.res.W").shape() == Shape{64, 32});
    for (double v : store.get("gal1.head0.b_h").values()) CHECK(v == 0.0);
    const double bound = std::sqrt(6.0 / (64 + 16));
    for (double v : store.get("gal1.head0.W_h").values()) CHECK(std::abs(v) <= bound);
    CHECK_THROWS_AS(gal_forward(Tensor::zeros({3, 64}), Tensor::zeros({2, 2}), view_gal(store, "gal1", 2), opts),
                    DimensionError);
}
