#include "graphtcn/efgat.hpp"

#include <algorithm>
#include <cmath>

#include "graphtcn/errors.hpp"

namespace gtcn {

Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = dist(rng);
    return Tensor(shape, std::move(v));
}

GalParams register_gal(ParameterStore& store, const std::string& prefix, std::size_t in_dim,
                       const GalConfig& config, const GalOptions& options, std::mt19937_64& rng) {
    const std::size_t f1 = config.per_head_out;
    if (options.edge_features) {
        store.add(prefix + ".edge.W", glorot_uniform({2, f1}, 2, f1, rng));
        store.add(prefix + ".edge.b", Tensor::zeros({f1}));
    }
    for (std::size_t k = 0; k < config.heads; ++k) {
        const std::string head = prefix + ".head" + std::to_string(k);
        store.add(head + ".w_src", glorot_uniform({in_dim, 1}, in_dim, 1, rng));
        store.add(head + ".w_dst", glorot_uniform({in_dim, 1}, in_dim, 1, rng));
        if (options.edge_features) store.add(head + ".w_edge", glorot_uniform({f1, 1}, f1, 1, rng));
        store.add(head + ".W_h", glorot_uniform({in_dim, f1}, in_dim, f1, rng));
        store.add(head + ".b_h", Tensor::zeros({f1}));
        if (options.separate_gate) {
            store.add(head + ".W_v", glorot_uniform({in_dim, f1}, in_dim, f1, rng));
            store.add(head + ".b_v", Tensor::zeros({f1}));
        }
    }
    if (!(options.residual_identity && in_dim == config.out_width())) {
        store.add(prefix + ".res.W", glorot_uniform({in_dim, config.out_width()}, in_dim, config.out_width(), rng));
        store.add(prefix + ".res.b", Tensor::zeros({config.out_width()}));
    }
    return view_gal(store, prefix, config.heads);
}

GalParams view_gal(const ParameterStore& store, const std::string& prefix, std::size_t heads) {
    auto opt = [&](const std::string& name) -> std::optional<Tensor> {
        if (!store.contains(name)) return std::nullopt;
        return store.get(name);
    };
    GalParams p;
    p.edge_W = opt(prefix + ".edge.W");
    p.edge_b = opt(prefix + ".edge.b");
    for (std::size_t k = 0; k < heads; ++k) {
        const std::string head = prefix + ".head" + std::to_string(k);
        GalHeadParams h{store.get(head + ".w_src"), store.get(head + ".w_dst"), opt(head + ".w_edge"),
                        store.get(head + ".W_h"),   store.get(head + ".b_h"),   opt(head + ".W_v"),
                        opt(head + ".b_v")};
        p.heads.push_back(std::move(h));
    }
    p.res_W = opt(prefix + ".res.W");
    p.res_b = opt(prefix + ".res.b");
    return p;
}

Tensor pairwise_displacements(const Tensor& positions) {
    const Shape& s = positions.shape();
    if (s.size() < 2 || s.back() != 2)
        throw DimensionError("positions must have shape [..., N, 2], got " + shape_str(s));
    const std::size_t n = s[s.size() - 2];
    const std::size_t batch = positions.size() / (2 * n);
    Shape out_shape(s.begin(), s.end() - 1);
    out_shape.push_back(n);
    out_shape.push_back(2);
    const auto p = positions.data();
    std::vector<double> d(batch * n * n * 2);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t c = 0; c < 2; ++c)
                    d[((b * n + i) * n + j) * 2 + c] = p[(b * n + i) * 2 + c] - p[(b * n + j) * 2 + c];
    return Tensor(std::move(out_shape), std::move(d));
}

Tensor compute_edge_features(const Tensor& positions, const Tensor& edge_W, const Tensor& edge_b) {
    return affine(pairwise_displacements(positions), edge_W, edge_b);
}

namespace {

// [..., N, 1] -> [..., N]
Tensor drop_last_unit(const Tensor& t) {
    Shape s(t.shape().begin(), t.shape().end() - 1);
    return reshape(t, std::move(s));
}

}  // namespace

Tensor attention_coefficients(const Tensor& node_feats, const std::optional<Tensor>& edge_feats,
                              const GalHeadParams& head, const Mask& neighbors, double leaky_slope) {
    const Tensor src = drop_last_unit(linear(node_feats, head.w_src));
    const Tensor dst = drop_last_unit(linear(node_feats, head.w_dst));
    Tensor logits = outer_add(src, dst);
    if (edge_feats) {
        if (!head.w_edge) throw ContractError("edge features given but the head has no edge score");
        logits = add(logits, drop_last_unit(linear(*edge_feats, *head.w_edge)));
    }
    return masked_softmax(leaky_relu(logits, leaky_slope), neighbors);
}

Tensor gated_node_transform(const Tensor& node_feats, const GalHeadParams& head) {
    const Tensor u = affine(node_feats, head.W_h, head.b_h);
    if (head.W_v && head.b_v) return mul(tanh(u), affine(node_feats, *head.W_v, *head.b_v));
    return mul(tanh(u), u);
}

Tensor gal_forward(const Tensor& node_feats, const Tensor& positions, const GalParams& params,
                   const GalOptions& options, std::vector<Tensor>* attention) {
    const Shape& ns = node_feats.shape();
    if (ns.size() < 2 || positions.rank() != ns.size() ||
        !std::equal(ns.begin(), ns.end() - 1, positions.shape().begin()))
        throw DimensionError("gal_forward: node features " + shape_str(ns) + " do not match positions " +
                             shape_str(positions.shape()));

    std::optional<Tensor> edges;
    if (options.edge_features) {
        if (!params.edge_W || !params.edge_b) throw ContractError("gal_forward: edge embedding parameters missing");
        edges = compute_edge_features(positions, *params.edge_W, *params.edge_b);
    }
    Shape logit_shape(ns.begin(), ns.end() - 1);
    logit_shape.push_back(ns[ns.size() - 2]);
    const Mask neighbors = Mask::all(logit_shape);

    std::vector<Tensor> head_out;
    for (const auto& head : params.heads) {
        const Tensor alpha = attention_coefficients(node_feats, edges, head, neighbors, options.leaky_slope);
        const Tensor g = gated_node_transform(node_feats, head);
        head_out.push_back(leaky_relu(bmm(alpha, g), options.leaky_slope));
        if (attention) attention->push_back(alpha.detach());
    }
    const Tensor aggregated = concat(head_out, ns.size() - 1);
    if (params.res_W) return add(aggregated, affine(node_feats, *params.res_W, *params.res_b));
    return add(aggregated, node_feats);
}

EfgatOutput efgat_forward(const Tensor& features, const Tensor& positions, const EfgatParams& params,
                          const GalOptions& options, bool record_attention) {
    if (features.rank() != 3 || positions.rank() != 3 || features.extent(0) != positions.extent(0) ||
        features.extent(1) != positions.extent(1))
        throw DimensionError("efgat_forward: features " + shape_str(features.shape()) + " vs positions " +
                             shape_str(positions.shape()));

    // time-major so that every step is one batch entry
    const Tensor x = permute(features, {1, 0, 2});
    const Tensor p = permute(positions, {1, 0, 2});
    const Tensor embedded = affine(x, params.embed_W, params.embed_b);

    std::vector<Tensor> att1, att2;
    const Tensor h1 = gal_forward(embedded, p, params.gal1, options, record_attention ? &att1 : nullptr);
    const Tensor h2 = gal_forward(h1, p, params.gal2, options, record_attention ? &att2 : nullptr);

    EfgatOutput out{permute(h2, {1, 0, 2}), {}};
    if (record_attention) {
        for (auto* layer : {&att1, &att2}) {
            std::vector<Tensor> heads;
            for (const auto& a : *layer) heads.push_back(repeat(a, 1));
            out.attention.layers.push_back(concat(heads, 0));
        }
    }
    return out;
}

}  // namespace gtcn
